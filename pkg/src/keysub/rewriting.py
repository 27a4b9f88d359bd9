"""Rewrite systems, normal forms and convergence checks.

The two built-in systems present the equational theories of signature
schemes with duplicate-signature-key-selection (``dsks``) and destructive
exclusive ownership (``deo``) weaknesses.
"""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .terms import (
    App,
    Fresh,
    Signature,
    Symbol,
    Term,
    Var,
    apply,
    nonvar_positions,
    occurs,
    positions,
    replace_at,
    subterm_at,
    vars_of,
)
from .unify import match, mgu


class RewriteBudgetExceeded(RuntimeError):
    """Raised when a normalization exceeds its step cap."""


DEFAULT_MAX_STEPS = 10_000
_CACHE_LIMIT = 200_000


@dataclass(frozen=True)
class RewriteRule:
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if isinstance(self.lhs, Var):
            raise ValueError("left-hand side of a rewrite rule cannot be a variable")
        if not vars_of(self.rhs) <= vars_of(self.lhs):
            raise ValueError(f"rule {self} introduces variables on its right-hand side")

    def __str__(self):
        return f"{self.lhs} -> {self.rhs}"


@dataclass(eq=False)
class RewriteTheory:
    name: str
    rules: tuple[RewriteRule, ...]
    signature: Signature = field(default_factory=Signature)
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        self.rules = tuple(self.rules)
        self._index: dict[str, list[RewriteRule]] = {}
        for r in self.rules:
            self._index.setdefault(r.lhs.head, []).append(r)
        self._cache: dict[Term, Term] = {}

    def __repr__(self):
        return f"RewriteTheory({self.name!r}, {len(self.rules)} rules)"

    @property
    def is_empty(self) -> bool:
        return not self.rules

    def rules_for(self, head: str) -> list[RewriteRule]:
        return self._index.get(head, [])

    def _root_step(self, t: App) -> Term | None:
        for rule in self._index.get(t.head, ()):
            sigma = match(rule.lhs, t)
            if sigma is not None:
                return apply(sigma, rule.rhs)
        return None

    def normalize(self, t: Term, max_steps: int | None = None) -> Term:
        """Innermost normal form of ``t``."""
        if not self.rules or isinstance(t, Var):
            return t
        budget = [self.max_steps if max_steps is None else max_steps]
        if len(self._cache) > _CACHE_LIMIT:
            self._cache.clear()
        return self._nf(t, budget)

    def _nf(self, t: Term, budget: list[int]) -> Term:
        if isinstance(t, Var):
            return t
        hit = self._cache.get(t)
        if hit is not None:
            return hit
        args = [self._nf(a, budget) for a in t.args]
        u = App(t.head, args) if args else t
        reduct = self._root_step(u) if u.head in self._index else None
        if reduct is None:
            out = u
        else:
            budget[0] -= 1
            if budget[0] < 0:
                raise RewriteBudgetExceeded(f"normalization of {t} exceeded the step cap")
            out = self._nf(reduct, budget)
        self._cache[t] = out
        return out

    def normalize_outermost(self, t: Term, max_steps: int | None = None) -> Term:
        """Normal form via repeated leftmost-outermost rewriting (no caching)."""
        steps = self.max_steps if max_steps is None else max_steps
        while True:
            for p in positions(t):
                s = subterm_at(t, p)
                if isinstance(s, App):
                    reduct = self._root_step(s)
                    if reduct is not None:
                        t = replace_at(t, p, reduct)
                        break
            else:
                return t
            steps -= 1
            if steps < 0:
                raise RewriteBudgetExceeded(f"outermost normalization exceeded the step cap")

    def is_normal(self, t: Term) -> bool:
        return self.normalize(t) == t

    def equal(self, s: Term, t: Term) -> bool:
        return self.normalize(s) == self.normalize(t)


EMPTY_THEORY = RewriteTheory("empty", ())


# -- built-in signatures and theories ---------------------------------------

def _v(name: str) -> Var:
    return Var(name)


x, y, y1, y2 = _v("x"), _v("y"), _v("y1"), _v("y2")
ONE, ZERO = App("1"), App("0")


def sig(m: Term, k: Term) -> App:
    return App("sig", (m, k))


def ver(m: Term, s: Term, k: Term) -> App:
    return App("ver", (m, s, k))


def pk(a: Term) -> App:
    return App("pk", (a,))


def sk(a: Term) -> App:
    return App("sk", (a,))


def skp(a: Term, b: Term) -> App:
    return App("skp", (a, b))


def pkp(a: Term, b: Term) -> App:
    return App("pkp", (a, b))


def sskp(a: Term, b: Term) -> App:
    return App("sskp", (a, b))


def ppkp(a: Term, b: Term) -> App:
    return App("ppkp", (a, b))


def f(a: Term, b: Term) -> App:
    return App("f", (a, b))


_COMMON = (
    Symbol("sig", 2),
    Symbol("ver", 3),
    Symbol("pk", 1, private=True),
    Symbol("sk", 1, private=True),
    Symbol("0", 0),
    Symbol("1", 0),
)
DSKS_SIGNATURE = Signature.of(*_COMMON, Symbol("skp", 2), Symbol("pkp", 2))
DEO_SIGNATURE = Signature.of(*_COMMON, Symbol("sskp", 2), Symbol("ppkp", 2), Symbol("f", 2))
BUILTIN_SIGNATURE = DSKS_SIGNATURE.merge(DEO_SIGNATURE)

# equational presentations (not convergent as given)
A_DSKS = (
    (ver(x, sig(x, sk(y)), pk(y)), ONE),
    (ver(x, sig(x, skp(y1, y2)), pkp(y1, y2)), ONE),
    (sig(x, skp(pk(y), sig(x, sk(y)))), sig(x, sk(y))),
)
A_DEO = (
    (ver(x, sig(x, sk(y)), pk(y)), ONE),
    (ver(x, sig(x, sskp(y1, y2)), ppkp(y1, y2)), ONE),
    (sig(f(pk(y), sig(x, sk(y))), sskp(pk(y), sig(x, sk(y)))), sig(x, sk(y))),
)

R_DSKS = (
    RewriteRule(ver(x, sig(x, sk(y)), pk(y)), ONE),
    RewriteRule(ver(x, sig(x, skp(y1, y2)), pkp(y1, y2)), ONE),
    RewriteRule(ver(x, sig(x, sk(y)), pkp(pk(y), sig(x, sk(y)))), ONE),
    RewriteRule(sig(x, skp(pk(y), sig(x, sk(y)))), sig(x, sk(y))),
)
R_DEO = (
    RewriteRule(ver(x, sig(x, sk(y)), pk(y)), ONE),
    RewriteRule(ver(x, sig(x, sskp(y1, y2)), ppkp(y1, y2)), ONE),
    RewriteRule(ver(f(pk(y), sig(x, sk(y))), sig(x, sk(y)), ppkp(pk(y), sig(x, sk(y)))), ONE),
    RewriteRule(sig(f(pk(y), sig(x, sk(y))), sskp(pk(y), sig(x, sk(y)))), sig(x, sk(y))),
)

DSKS = RewriteTheory("dsks", R_DSKS, DSKS_SIGNATURE)
DEO = RewriteTheory("deo", R_DEO, DEO_SIGNATURE)

EQUATIONS = {"dsks": A_DSKS, "deo": A_DEO}


def builtin_theory(name: str) -> RewriteTheory:
    try:
        return {"dsks": DSKS, "deo": DEO, "empty": EMPTY_THEORY}[name]
    except KeyError:
        raise KeyError(f"unknown built-in theory {name!r} (expected dsks, deo or empty)") from None


def theory_signature(rules: Iterable[RewriteRule], base: Signature = BUILTIN_SIGNATURE) -> Signature:
    """Symbols used by ``rules``; arities and privacy taken from ``base`` when known."""
    found: dict[str, Symbol] = {}
    for r in rules:
        for side in (r.lhs, r.rhs):
            stack = [side]
            while stack:
                t = stack.pop()
                if isinstance(t, App):
                    known = base.get(t.head)
                    found.setdefault(t.head, known or Symbol(t.head, len(t.args)))
                    stack.extend(t.args)
    return Signature.of(*found.values())


# -- critical pairs ----------------------------------------------------------

def critical_pairs(theory: RewriteTheory) -> list[tuple[Term, Term]]:
    """Overlaps of renamed-apart rules at non-variable positions.

    Each pair is (reduct by the outer rule, reduct by the inner rule) of the
    overlapped term.  Trivial root self-overlaps are skipped.
    """
    fresh = Fresh()
    pairs: list[tuple[Term, Term]] = []
    rules = theory.rules
    for i, outer in enumerate(rules):
        lo, ro = fresh.rename(outer.lhs, outer.rhs)
        for j, inner in enumerate(rules):
            li, ri = fresh.rename(inner.lhs, inner.rhs)
            for p in nonvar_positions(lo):
                if p == () and i == j:
                    continue
                sigma = mgu(subterm_at(lo, p), li)
                if sigma is None:
                    continue
                overlapped = apply(sigma, lo)
                pairs.append((apply(sigma, ro), replace_at(overlapped, p, apply(sigma, ri))))
    return pairs


# -- termination via lexicographic path orderings ----------------------------

def lpo_greater(s: Term, t: Term, rank: dict[str, int]) -> bool:
    """s >_lpo t under the precedence given by ``rank`` (higher = bigger)."""
    if isinstance(s, Var):
        return False
    if isinstance(t, Var):
        return occurs(t, s)
    if any(a == t or lpo_greater(a, t, rank) for a in s.args):
        return True
    rs, rt = rank.get(s.head, -1), rank.get(t.head, -1)
    if s.head != t.head:
        return rs > rt and all(lpo_greater(s, b, rank) for b in t.args)
    if len(s.args) != len(t.args):
        return False
    for a, b in zip(s.args, t.args):
        if a != b:
            return lpo_greater(a, b, rank) and all(lpo_greater(s, c, rank) for c in t.args)
    return False


@dataclass(frozen=True)
class ConvergenceReport:
    terminating: bool | None  # None = unknown
    locally_confluent: bool
    precedence: tuple[str, ...] | None = None
    unjoinable: tuple[tuple[Term, Term], ...] = ()
    critical_pair_count: int = 0

    @property
    def convergent(self) -> bool:
        return bool(self.terminating) and self.locally_confluent

    def __str__(self):
        term = "yes" if self.terminating else "unknown"
        conf = "yes" if self.locally_confluent else "no"
        return f"terminating: {term}, locally_confluent: {conf}"


def find_lpo_precedence(rules: Sequence[RewriteRule], max_symbols: int = 9) -> tuple[str, ...] | None:
    """Exhaustive search for a total precedence orienting every rule."""
    symbols: dict[str, int] = {}
    for r in rules:
        for side in (r.lhs, r.rhs):
            for p in positions(side):
                s = subterm_at(side, p)
                if isinstance(s, App):
                    symbols[s.head] = len(s.args)
    if len(symbols) > max_symbols:
        return None
    heads = {r.lhs.head for r in rules}
    # try likely precedences first: rule heads above the rest, bigger arity first
    base = sorted(symbols, key=lambda n: (n not in heads, -symbols[n], n))
    for perm in itertools.permutations(base):
        rank = {name: len(perm) - i for i, name in enumerate(perm)}
        if all(lpo_greater(r.lhs, r.rhs, rank) for r in rules):
            return perm
    return None


def check_convergence(theory: RewriteTheory) -> ConvergenceReport:
    precedence = find_lpo_precedence(theory.rules)
    pairs = critical_pairs(theory)
    unjoinable = []
    for a, b in pairs:
        try:
            joined = theory.normalize(a) == theory.normalize(b)
        except RewriteBudgetExceeded:
            joined = False
        if not joined:
            unjoinable.append((a, b))
    return ConvergenceReport(
        terminating=True if precedence is not None else None,
        locally_confluent=not unjoinable,
        precedence=precedence,
        unjoinable=tuple(unjoinable),
        critical_pair_count=len(pairs),
    )
