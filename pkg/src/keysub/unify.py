"""Syntactic unification and matching.

``None`` signals non-unifiability; it is an answer, not an error.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .terms import App, Substitution, Term, Var, apply

Equation = tuple[Term, Term]


@dataclass(frozen=True)
class UnificationSystem:
    """Finite set of equations, tagged with the theory they are read modulo."""

    equations: tuple[Equation, ...]
    theory: str | None = None

    def __iter__(self):
        return iter(self.equations)

    def __len__(self):
        return len(self.equations)


def _walk(t: Term, b: dict[Var, Term]) -> Term:
    while isinstance(t, Var) and t in b:
        t = b[t]
    return t


def _occurs(v: Var, t: Term, b: dict[Var, Term]) -> bool:
    stack = [t]
    while stack:
        s = _walk(stack.pop(), b)
        if isinstance(s, Var):
            if s == v:
                return True
        elif not s.ground:
            stack.extend(s.args)
    return False


def solve_system(equations: Iterable[Equation]) -> Substitution | None:
    """Simultaneous most general unifier of all equations, or None.

    Equation-set transformation with occurs check.  When two variables meet,
    the one with the larger (index, name) key is eliminated, so fresh copies
    of rule variables are bound to the older variables they meet.
    """
    b: dict[Var, Term] = {}
    stack = list(equations)[::-1]
    while stack:
        s, t = stack.pop()
        s, t = _walk(s, b), _walk(t, b)
        if s == t:
            continue
        if isinstance(s, Var) and isinstance(t, Var):
            if s.key < t.key:
                s, t = t, s
            b[s] = t
        elif isinstance(s, Var):
            if _occurs(s, t, b):
                return None
            b[s] = t
        elif isinstance(t, Var):
            if _occurs(t, s, b):
                return None
            b[t] = s
        else:
            if s.head != t.head or len(s.args) != len(t.args):
                return None
            stack.extend(reversed(list(zip(s.args, t.args))))

    resolved: dict[Var, Term] = {}

    def resolve(u: Term) -> Term:
        if isinstance(u, Var):
            if u not in b:
                return u
            if u not in resolved:
                resolved[u] = resolve(b[u])
            return resolved[u]
        if u.ground:
            return u
        return App(u.head, [resolve(a) for a in u.args])

    return Substitution({x: resolve(x) for x in b})


def mgu(s: Term, t: Term) -> Substitution | None:
    return solve_system([(s, t)])


def unifiable(s: Term, t: Term) -> bool:
    return mgu(s, t) is not None


def match(pattern: Term, term: Term, subst: Mapping[Var, Term] | None = None) -> dict[Var, Term] | None:
    """One-way matching: extend ``subst`` so that pattern·subst == term."""
    out = dict(subst) if subst else {}
    stack = [(pattern, term)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            bound = out.get(p)
            if bound is None:
                out[p] = t
            elif bound != t:
                return None
        elif isinstance(t, Var):
            return None
        else:
            if p.head != t.head or len(p.args) != len(t.args):
                return None
            if p.ground:
                if p != t:
                    return None
                continue
            stack.extend(zip(p.args, t.args))
    return out


def is_instance(term: Term, pattern: Term) -> bool:
    return match(pattern, term) is not None


def unifies(sigma: Mapping[Var, Term], equations: Iterable[Equation]) -> bool:
    return all(apply(sigma, u) == apply(sigma, v) for u, v in equations)
