"""Basic narrowing, equational unification and normal-form guessing.

Several terms (both sides of a unification system, or every term of a
constraint system) are narrowed together under the tupling symbol
``TUPLE`` so that instantiations propagate to all of them at once.
"""
from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

from .rewriting import RewriteTheory
from .terms import (
    EMPTY,
    App,
    Fresh,
    Position,
    Substitution,
    Term,
    Var,
    apply,
    canonical,
    is_prefix,
    nonvar_positions,
    ordered_vars,
    replace_at,
    size,
    subterm_at,
    vars_in,
)
from .unify import Equation, mgu, solve_system

TUPLE = "$tuple"


class NarrowingBoundExceeded(RuntimeError):
    """A derivation outgrew the size of its starting term."""


def tuple_term(ts: Sequence[Term]) -> App:
    return App(TUPLE, ts)


@dataclass(frozen=True)
class NarrowingState:
    subject: Term
    basic: frozenset[Position]
    accumulated: Substitution
    depth: int
    variables: frozenset[Var]  # variables of the starting subject
    bound: int  # size of the starting subject

    @classmethod
    def start(cls, t: Term) -> "NarrowingState":
        return cls(t, frozenset(nonvar_positions(t)), EMPTY, 0, frozenset(vars_in([t])), size(t))

    def key(self) -> tuple:
        """Identifies states up to renaming of the variables introduced by narrowing."""
        vs = sorted(self.variables, key=lambda v: v.key)
        images = [self.accumulated.get(v, v) for v in vs]
        return canonical([self.subject, *images]), self.basic


def narrow_step(state: NarrowingState, theory: RewriteTheory, fresh: Fresh) -> list[NarrowingState]:
    """All one-step basic narrowing successors, rules in theory order then
    positions leftmost-outermost.

    Every basic occurrence of the instantiated redex is contracted in the
    same step.
    """
    out: list[NarrowingState] = []
    if not theory.rules:
        return out
    t = state.subject
    basic = sorted(state.basic)
    for rule in theory.rules:
        for p in basic:
            redex = subterm_at(t, p)
            if not isinstance(redex, App) or redex.head != rule.lhs.head:
                continue
            lhs, rhs = fresh.rename(rule.lhs, rule.rhs)
            sigma = mgu(redex, lhs)
            if sigma is None:
                continue
            instance = apply(sigma, t)
            target = apply(sigma, lhs)
            contractum = apply(sigma, rhs)
            hits = [q for q in basic if subterm_at(instance, q) == target]
            new_subject = instance
            for q in hits:
                new_subject = replace_at(new_subject, q, contractum)
            rhs_positions = nonvar_positions(rhs)
            new_basic = {q for q in state.basic if not any(is_prefix(h, q) for h in hits)}
            for h in hits:
                new_basic.update(h + r for r in rhs_positions)
            acc = sigma.compose(state.accumulated).restrict(state.variables)
            depth = state.depth + 1
            if depth > state.bound:
                raise NarrowingBoundExceeded(
                    f"derivation of length {depth} from a term of size {state.bound}"
                )
            out.append(
                NarrowingState(new_subject, frozenset(new_basic), acc, depth, state.variables, state.bound)
            )
    return out


def narrowing_tree(
    t: Term, theory: RewriteTheory, fresh: Fresh | None = None, dedupe: bool = True
) -> Iterator[NarrowingState]:
    """Depth-first enumeration of every state reachable by basic narrowing,
    the starting state included.  Variant states are visited once."""
    fresh = fresh or Fresh()
    root = NarrowingState.start(t)
    seen = {root.key()} if dedupe else None
    stack = [root]
    while stack:
        state = stack.pop()
        yield state
        succ = narrow_step(state, theory, fresh)
        for s in reversed(succ):
            if seen is not None:
                k = s.key()
                if k in seen:
                    continue
                seen.add(k)
            stack.append(s)


def max_derivation_length(t: Term, theory: RewriteTheory) -> int:
    """Longest basic-narrowing derivation from ``t`` (exhaustive, no dedupe)."""
    return max(s.depth for s in narrowing_tree(t, theory, dedupe=False))


def guess_normal_forms(t: Term, theory: RewriteTheory, fresh: Fresh | None = None) -> list[tuple[Term, Substitution]]:
    """Pairs (t', θ) reachable from t by basic narrowing, including (t, identity)."""
    return [(s.subject, s.accumulated) for s in narrowing_tree(t, theory, fresh)]


def equational_unify(
    equations: Iterable[Equation], theory: RewriteTheory, fresh: Fresh | None = None
) -> list[Substitution]:
    """Complete set of unifiers modulo the theory presented by ``theory``.

    Narrow both sides of all equations together, then close each branch with
    syntactic unification.
    """
    eqs = list(equations)
    if not eqs:
        return [EMPTY]
    flat = [side for eq in eqs for side in eq]
    variables = vars_in(flat)
    order = ordered_vars(flat)
    results: list[Substitution] = []
    seen: set = set()
    for state in narrowing_tree(tuple_term(flat), theory, fresh):
        sides = state.subject.args
        sigma = solve_system(zip(sides[0::2], sides[1::2]))
        if sigma is None:
            continue
        solution = sigma.compose(state.accumulated).restrict(variables)
        key = canonical([solution.get(v, v) for v in order])
        if key in seen:
            continue
        seen.add(key)
        results.append(solution)
    return results
