"""Intruder deduction rules, derivations and a bounded deducibility oracle.

The oracle (``one_step``/``closure``/``deducible``) never uses saturation, so
it can cross-check it.  Premises that are not variables are matched modulo
the theory through their narrowing variants, and every match is re-checked
by normalization.  It works over ground terms in normal form
and restricts rule instances to normal substitutions.
"""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

from .narrowing import narrowing_tree
from .rewriting import DEO, DSKS, RewriteTheory
from .terms import (
    App,
    Signature,
    Substitution,
    Symbol,
    Fresh,
    Term,
    Var,
    apply,
    ordered_vars,
    size,
    subterms_of,
    vars_in,
)
from .unify import match

_VAR_NAMES = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class DeductionRule:
    """premises ↠ conclusion; premises form a multiset kept as a tuple.

    ``origin`` records how a saturated rule was built: ``None`` for a base
    rule, otherwise ``("narrow", parent, θ)``, ``("closure", first, second, θ1, θ2)``
    or ``("instance", parent, θ)``; each θ is a dict binding every variable of
    the parent it belongs to.
    """

    premises: tuple[Term, ...]
    conclusion: Term
    name: str = ""
    origin: tuple | None = field(default=None, compare=False)

    def __eq__(self, other):
        if not isinstance(other, DeductionRule):
            return NotImplemented
        return self.premises == other.premises and self.conclusion == other.conclusion

    def __hash__(self):
        return hash((self.premises, self.conclusion))

    @property
    def var_premises(self) -> tuple[Var, ...]:
        return tuple(p for p in self.premises if isinstance(p, Var))

    @property
    def nonvar_premises(self) -> tuple[App, ...]:
        return tuple(p for p in self.premises if isinstance(p, App))

    @property
    def variables(self) -> set[Var]:
        return vars_in((*self.premises, self.conclusion))

    def is_constructor(self) -> bool:
        """Rule of the shape x1..xn ↠ f(x1..xn) with distinct variables."""
        c = self.conclusion
        return (
            isinstance(c, App)
            and all(isinstance(a, Var) for a in c.args)
            and len(set(c.args)) == len(c.args)
            and sorted(self.premises, key=str) == sorted(c.args, key=str)
        )

    def rename(self, rho: Mapping[Var, Term]) -> "DeductionRule":
        return DeductionRule(tuple(apply(rho, p) for p in self.premises), apply(rho, self.conclusion), self.name, self.origin)

    def __str__(self):
        if not self.premises:
            return f"-> {self.conclusion}"
        return f"{', '.join(map(str, self.premises))} -> {self.conclusion}"

    def __repr__(self):
        return f"DeductionRule({self.name!r}: {self})"


def constructor_rule(symbol: Symbol) -> DeductionRule:
    names = _VAR_NAMES if symbol.arity <= 3 else [f"x{i}" for i in range(1, symbol.arity + 1)]
    args = tuple(Var(n) for n in names[: symbol.arity])
    return DeductionRule(args, App(symbol.name, args), symbol.name)


def rule_from_term(t: Term, name: str = "") -> DeductionRule:
    """The rule Var(t) ↠ t associated with a term of the intruder's set S."""
    return DeductionRule(tuple(ordered_vars([t])), t, name or (t.head if isinstance(t, App) else str(t)))


@dataclass(eq=False)
class IntruderSystem:
    name: str
    rules: tuple[DeductionRule, ...]
    theory: RewriteTheory | None
    signature: Signature = field(default_factory=Signature)

    def __post_init__(self):
        self.rules = tuple(self.rules)

    def __repr__(self):
        return f"IntruderSystem({self.name!r}, {len(self.rules)} rules, theory={self.theory.name if self.theory else None})"

    @property
    def modulo(self) -> bool:
        return self.theory is not None and not self.theory.is_empty

    def normalize(self, t: Term) -> Term:
        return self.theory.normalize(t) if self.modulo else t

    def rule(self, name: str) -> DeductionRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(f"no rule named {name!r} in {self.name}")

    def empty_theory(self) -> "IntruderSystem":
        return IntruderSystem(self.name + "/empty", self.rules, None, self.signature)

    def with_rules(self, rules: Iterable[DeductionRule], name: str | None = None) -> "IntruderSystem":
        return IntruderSystem(name or self.name, tuple(rules), self.theory, self.signature)


def public_rules(signature: Signature, order: Iterable[str] | None = None) -> tuple[DeductionRule, ...]:
    names = list(order) if order is not None else [s.name for s in signature]
    return tuple(constructor_rule(signature.get(n)) for n in names if not signature.is_private(n))


L_DSKS = public_rules(DSKS.signature, ["sig", "ver", "skp", "pkp", "0", "1"])
L_DEO = public_rules(DEO.signature, ["sig", "ver", "sskp", "ppkp", "f", "0", "1"])

I_DSKS = IntruderSystem("dsks", L_DSKS, DSKS, DSKS.signature)
I_DEO = IntruderSystem("deo", L_DEO, DEO, DEO.signature)


def builtin_intruder(name: str) -> IntruderSystem:
    try:
        return {"dsks": I_DSKS, "deo": I_DEO}[name]
    except KeyError:
        raise KeyError(f"unknown built-in intruder system {name!r}") from None


def intruder_for_theory(theory: RewriteTheory) -> IntruderSystem:
    if theory.name in ("dsks", "deo") and theory in (DSKS, DEO):
        return builtin_intruder(theory.name)
    return IntruderSystem(theory.name, public_rules(theory.signature), theory, theory.signature)


# -- derivations -------------------------------------------------------------

@dataclass(frozen=True)
class DerivationStep:
    rule: DeductionRule
    subst: Substitution
    term: Term

    def __str__(self):
        return f"{self.rule.name} σ={self.subst} ⊢ {self.term}"


@dataclass(frozen=True)
class Derivation:
    start: tuple[Term, ...]
    steps: tuple[DerivationStep, ...]
    goal: Term

    def __len__(self):
        return len(self.steps)

    def trace(self) -> list[str]:
        return [str(s) for s in self.steps]


@dataclass(frozen=True)
class DerivationCheck:
    valid: bool
    failed_step: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.valid


def check_derivation(d: Derivation, system: IntruderSystem) -> DerivationCheck:
    """Replay every step; premises must already be known (modulo the theory)."""
    norm = system.normalize
    known = {norm(t) for t in d.start}
    rules = set(system.rules)
    for i, step in enumerate(d.steps):
        if step.rule not in rules:
            return DerivationCheck(False, i, f"rule {step.rule.name!r} is not a rule of {system.name}")
        for p in step.rule.premises:
            inst = apply(step.subst, p)
            if not (isinstance(inst, App) and inst.ground):
                return DerivationCheck(False, i, f"premise {inst} is not ground")
            if norm(inst) not in known:
                return DerivationCheck(False, i, f"premise {norm(inst)} is not known")
        produced = norm(apply(step.subst, step.rule.conclusion))
        if produced != norm(step.term):
            return DerivationCheck(False, i, f"rule yields {produced}, step claims {step.term}")
        known.add(produced)
    if norm(d.goal) not in known:
        return DerivationCheck(False, len(d.steps), f"goal {d.goal} never derived")
    return DerivationCheck(True)


# -- bounded oracle ------------------------------------------------------------

def _by_head(terms: Iterable[Term]) -> dict[str, list[Term]]:
    out: dict[str, list[Term]] = {}
    for t in terms:
        if isinstance(t, App):
            out.setdefault(t.head, []).append(t)
    return out


def _join(patterns: list[Term], pool: dict[str, list[Term]], sigma: dict) -> Iterator[dict]:
    """Syntactic matches of every pattern against some pool member."""
    if not patterns:
        yield sigma
        return
    first, rest = patterns[0], patterns[1:]
    if isinstance(first, Var):
        if first in sigma:
            bound = sigma[first]
            if isinstance(bound, App) and bound in pool.get(bound.head, ()):
                yield from _join(rest, pool, sigma)
            return
        candidates = [t for ts in pool.values() for t in ts]
    else:
        candidates = pool.get(first.head, [])
    for t in candidates:
        ext = match(first, t, sigma)
        if ext is not None:
            yield from _join(rest, pool, ext)


def _enumerate(variables: list[Var], domain: list[Term], sigma: dict) -> Iterator[dict]:
    for combo in itertools.product(domain, repeat=len(variables)):
        ext = dict(sigma)
        ext.update(zip(variables, combo))
        yield ext


def one_step(
    known: Iterable[Term],
    system: IntruderSystem,
    universe: Iterable[Term] | None = None,
) -> set[Term]:
    """Conclusions obtainable by one rule application from ``known``.

    ``known`` must hold ground terms (normal forms when the system carries a
    theory).  With a ``universe`` only conclusions inside it are produced and
    rule variables that no premise constrains range over it; without one they
    range over ``known`` and its subterms.
    """
    K = set(known)
    pool = _by_head(K)
    U = set(universe) if universe is not None else None
    upool = _by_head(U) if U is not None else None
    domain = sorted(subterms_of(K) | (U or set()), key=str)
    out: set[Term] = set()
    for rule in system.rules:
        if system.modulo:
            out |= _step_modulo(rule, system, K, pool, U, upool, domain)
        else:
            out |= _step_free(rule, K, pool, U, upool)
    return out if U is None else out & U


def _step_free(rule, K, pool, U, upool) -> set[Term]:
    out = set()
    var_prem = [v for v in rule.var_premises]
    for sigma in _join(list(rule.nonvar_premises), pool, {}):
        if U is not None and isinstance(rule.conclusion, App):
            heads = upool.get(rule.conclusion.head, [])
            matches = (m for m in (match(rule.conclusion, u, sigma) for u in heads) if m is not None)
        else:
            matches = iter([sigma])
        for s in matches:
            for full in _join(var_prem, pool, s):
                c = apply(full, rule.conclusion)
                if isinstance(c, App) and c.ground:
                    out.add(c)
    return out


def _step_modulo(rule, system, K, pool, U, upool, domain) -> set[Term]:
    norm = system.normalize
    out = set()
    if rule.is_constructor() and U is not None:
        c = rule.conclusion
        # contractum is already normal
        for u in upool.get(c.head, []):
            s = match(c, u)
            if s is not None and all(s[v] in K for v in rule.var_premises):
                out.add(u)
        # root redexes f(k1..kn), ki ∈ K
        for rr in system.theory.rules_for(c.head):
            if len(rr.lhs.args) != len(c.args):
                continue
            for s in _join(list(rr.lhs.args), pool, {}):
                out.add(norm(apply(s, rr.rhs)))
        if not c.args:
            out.add(norm(c))
        return out
    var_prem = list(dict.fromkeys(rule.var_premises))
    nonvar = list(rule.nonvar_premises)
    for sigma in _join(var_prem, pool, {}):
        for full in _bind_modulo(nonvar, sigma, K, pool, domain, system.theory):
            rest = [v for v in vars_in([rule.conclusion]) if v not in full]
            for s in _enumerate(rest, domain, full) if rest else [full]:
                out.add(norm(apply(s, rule.conclusion)))
    return out


def _bind_modulo(premises, sigma, K, pool, domain, theory) -> Iterator[dict]:
    """Extend ``sigma`` so that every premise normalizes into ``K``.

    Candidates come from syntactic matches of the premise's narrowing variants
    against ``K``; variables the rewriting erased range over ``domain``.  Each
    candidate is re-checked by normalization.
    """
    if not premises:
        yield sigma
        return
    p, rest = premises[0], premises[1:]
    norm = theory.normalize
    pvars = ordered_vars([p])
    seen = set()
    for variant, theta in _variants(p, theory):
        if isinstance(variant, Var):
            candidates = list(K)
        else:
            candidates = pool.get(variant.head, [])
        for k in candidates:
            tau = match(variant, k)
            if tau is None:
                continue
            partial = {v: apply(tau, theta.get(v, v)) for v in pvars}
            loose = sorted(vars_in(partial.values()), key=lambda v: v.key)
            for fill in _enumerate(loose, domain, {}) if loose else [{}]:
                ext = dict(sigma)
                ok = True
                for v in pvars:
                    image = norm(apply(fill, partial[v]))
                    if ext.setdefault(v, image) != image:
                        ok = False
                        break
                if not ok:
                    continue
                key = tuple(ext[v] for v in pvars)
                if key in seen or norm(apply(ext, p)) not in K:
                    continue
                seen.add(key)
                yield from _bind_modulo(rest, ext, K, pool, domain, theory)


_VARIANTS: dict = {}


def _variants(p: Term, theory: RewriteTheory) -> list:
    """(normal form candidate, substitution) pairs from basic narrowing of ``p``."""
    key = (p, theory.name, theory.rules)
    if key not in _VARIANTS:
        start = 1 + max((v.index for v in vars_in([p])), default=0)
        _VARIANTS[key] = [(s.subject, dict(s.accumulated.items())) for s in narrowing_tree(p, theory, Fresh(start))]
    return _VARIANTS[key]


def closure(
    start: Iterable[Term],
    system: IntruderSystem,
    universe: Iterable[Term],
    max_rounds: int = 1000,
) -> set[Term]:
    """Least fixpoint of ``one_step`` inside a finite universe."""
    norm = system.normalize
    known = {norm(t) for t in start}
    U = {norm(t) for t in universe} | known
    for _ in range(max_rounds):
        new = one_step(known, system, U) - known
        if not new:
            break
        known |= new
    return known


def default_universe(start: Iterable[Term], goals: Iterable[Term], system: IntruderSystem, size_cap: int | None = None) -> set[Term]:
    norm = system.normalize
    base = subterms_of([norm(t) for t in (*start, *goals)])
    base |= {norm(r.conclusion) for r in system.rules if not r.premises}
    return {t for t in base if isinstance(t, App) and t.ground and (size_cap is None or size(t) <= size_cap)}


def deducible(
    start: Iterable[Term],
    goal: Term,
    system: IntruderSystem,
    size_cap: int | None = None,
    universe: Iterable[Term] | None = None,
) -> bool:
    """True is definitive; False only means "not within the bound".

    The bound is the universe (default: subterms of the start set and goal,
    plus nullary conclusions) cut at ``size_cap`` (default: largest input size + 4).
    """
    start = list(start)
    norm = system.normalize
    goal = norm(goal)
    if goal in {norm(t) for t in start}:
        return True
    if size_cap is None:
        size_cap = max([size(goal), *(size(t) for t in start)]) + 4
    U = set(universe) if universe is not None else default_universe(start, [goal], system, size_cap)
    U.add(goal)
    return goal in closure(start, system, U)


# -- witness search in the empty theory --------------------------------------

def find_derivation(start: Iterable[Term], goal: Term, system: IntruderSystem, limit: int = 100_000) -> Derivation | None:
    """Goal-directed proof search for a syntactic (theory-free) system.

    Non-variable premises are looked up among known terms; variable premises
    are proved recursively.  Returns None when no derivation is found.
    """
    start = tuple(start)
    known = set(start)
    steps: list[DerivationStep] = []
    budget = [limit]

    def prove(g: Term, stack: frozenset) -> bool:
        if g in known:
            return True
        if g in stack or not (isinstance(g, App) and g.ground):
            return False
        budget[0] -= 1
        if budget[0] < 0:
            return False
        stack = stack | {g}
        for rule in system.rules:
            s = match(rule.conclusion, g)
            if s is None:
                continue
            pool = _by_head(known)
            for full in _join(list(rule.nonvar_premises), pool, s):
                unbound = [v for v in rule.var_premises if v not in full]
                candidates = _enumerate(unbound, sorted(known, key=str), full) if unbound else [full]
                for inst in candidates:
                    if all(prove(inst[v], stack) for v in rule.var_premises):
                        steps.append(DerivationStep(rule, Substitution(inst).restrict(rule.variables), g))
                        known.add(g)
                        return True
        return False

    if not prove(goal, frozenset()):
        return None
    return Derivation(start, tuple(steps), goal)
