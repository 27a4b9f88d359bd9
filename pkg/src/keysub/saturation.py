"""Saturation of deduction rules so that the rewrite theory becomes
dispensable on normal ground terms.

Three inferences, applied with a FIFO worklist:

* Narrow: one basic narrowing step on (premises, conclusion) viewed as a
  single tuple, every non-variable position basic.
* Closure: compose a rule ``l1 -> r1`` into a non-variable premise ``t`` of
  ``t, l2 -> r2`` through ``mgu(r1, t)``.
* Subsumption: a rule is dropped when another rule has the same conclusion
  and a sub-multiset of its premises, up to variable renaming.

Each generated rule keeps its provenance, which lets a derivation step with a
saturated rule be unfolded into steps with the original rules
(``expand_step``).
"""
from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .intruder import (
    I_DEO,
    I_DSKS,
    Derivation,
    DerivationStep,
    DeductionRule,
    IntruderSystem,
)
from .narrowing import NarrowingState, narrow_step, tuple_term
from .rewriting import RewriteTheory, f, pk, ppkp, sig, sk, skp, sskp
from .terms import App, Fresh, Substitution, Term, Var, apply, ordered_vars
from .unify import mgu

DEFAULT_CAP = 256
_NAMES = ("x", "y", "z", "u", "v", "w")


class SaturationCapExceeded(RuntimeError):
    """More rules were generated than the configured cap allows."""


def _var_names(n: int) -> list[str]:
    if n <= len(_NAMES):
        return list(_NAMES[:n])
    return [f"x{i}" for i in range(1, n + 1)]


def canonical_rule(rule: DeductionRule) -> tuple[DeductionRule, Substitution]:
    """Rename variables left to right over premises then conclusion.

    Returns the renamed rule and the renaming used.
    """
    vs = ordered_vars((*rule.premises, rule.conclusion))
    rho = Substitution({v: Var(n) for v, n in zip(vs, _var_names(len(vs)))})
    return rule.rename(rho), rho


def _renaming_match(pattern: Term, term: Term, rho: dict) -> dict | None:
    """Extend ``rho`` into an injective variable renaming mapping pattern onto term."""
    out = dict(rho)
    used = set(out.values())
    stack = [(pattern, term)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            if not isinstance(t, Var):
                return None
            if p in out:
                if out[p] != t:
                    return None
            elif t in used:
                return None
            else:
                out[p] = t
                used.add(t)
        elif isinstance(t, Var) or p.head != t.head or len(p.args) != len(t.args):
            return None
        else:
            stack.extend(zip(p.args, t.args))
    return out


def subsumes(general: DeductionRule, specific: DeductionRule) -> bool:
    """Same conclusion and premises forming a sub-multiset, up to renaming."""
    if len(general.premises) > len(specific.premises):
        return False
    rho = _renaming_match(general.conclusion, specific.conclusion, {})
    if rho is None:
        return False

    def assign(i: int, rho: dict, taken: frozenset) -> bool:
        if i == len(general.premises):
            return True
        p = general.premises[i]
        for j, q in enumerate(specific.premises):
            if j in taken:
                continue
            ext = _renaming_match(p, q, rho)
            if ext is not None and assign(i + 1, ext, taken | {j}):
                return True
        return False

    return assign(0, rho, frozenset())


def is_variant_rule(r1: DeductionRule, r2: DeductionRule) -> bool:
    return len(r1.premises) == len(r2.premises) and subsumes(r1, r2) and subsumes(r2, r1)


@dataclass(frozen=True)
class SaturationEvent:
    inference: str  # narrow | closure | subsumed | deleted
    rule: DeductionRule
    parents: tuple[DeductionRule, ...] = ()

    def __str__(self):
        via = " from " + " & ".join(p.name for p in self.parents) if self.parents else ""
        return f"{self.inference}: {self.rule.name}: {self.rule}{via}"


@dataclass
class SaturationState:
    rules: list[DeductionRule]
    worklist: deque = field(default_factory=deque)
    trace: list[SaturationEvent] = field(default_factory=list)
    generated: int = 0


def _is_tautology(rule: DeductionRule) -> bool:
    return rule.conclusion in rule.premises


def _narrowings(rule: DeductionRule, theory: RewriteTheory, fresh: Fresh) -> list[DeductionRule]:
    subject = tuple_term((*rule.premises, rule.conclusion))
    out = []
    for succ in narrow_step(NarrowingState.start(subject), theory, fresh):
        *prem, concl = succ.subject.args
        theta = {v: succ.accumulated.get(v, v) for v in rule.variables}
        out.append(DeductionRule(tuple(prem), concl, "", ("narrow", rule, theta)))
    return out


def _closures(first: DeductionRule, second: DeductionRule, fresh: Fresh) -> list[DeductionRule]:
    """Plug ``first`` into every non-variable premise of ``second``."""
    out = []
    rho = fresh.renaming(ordered_vars((*first.premises, first.conclusion)))
    renamed = first.rename(rho)
    for i, t in enumerate(second.premises):
        if isinstance(t, Var):
            continue
        sigma = mgu(renamed.conclusion, t)
        if sigma is None:
            continue
        rest = second.premises[:i] + second.premises[i + 1:]
        prem = tuple(apply(sigma, p) for p in (*renamed.premises, *rest))
        theta1 = {v: apply(sigma, rho.get(v, v)) for v in first.variables}
        theta2 = {v: apply(sigma, v) for v in second.variables}
        out.append(
            DeductionRule(prem, apply(sigma, second.conclusion), "", ("closure", first, second, theta1, theta2))
        )
    return out


def _rebase_origin(origin: tuple, rho: Substitution) -> tuple:
    """Express the stored parent substitutions over the renamed rule's variables.

    Parent substitutions are plain dicts binding every parent variable, since
    an identity binding before renaming is not one after it.
    """
    kind = origin[0]
    if kind == "closure":
        _, a, b, t1, t2 = origin
        return (kind, a, b, _images(t1, rho), _images(t2, rho))
    _, parent, theta = origin
    return (kind, parent, _images(theta, rho))


def _images(theta: dict, rho: Substitution) -> dict:
    return {v: apply(rho, t) for v, t in theta.items()}


def saturate(
    rules: Sequence[DeductionRule],
    theory: RewriteTheory,
    cap: int = DEFAULT_CAP,
    state: SaturationState | None = None,
) -> list[DeductionRule]:
    """Saturated rule list: surviving input rules first, then additions in
    order of construction."""
    return saturate_with_trace(rules, theory, cap, state).rules


def saturate_with_trace(
    rules: Sequence[DeductionRule],
    theory: RewriteTheory,
    cap: int = DEFAULT_CAP,
    state: SaturationState | None = None,
) -> SaturationState:
    fresh = Fresh()
    st = state or SaturationState([])

    def add(rule: DeductionRule, parents: tuple = (), inference: str = "input") -> None:
        if _is_tautology(rule):
            return
        if inference != "input":
            rule_c, rho = canonical_rule(rule)
            rule = DeductionRule(rule_c.premises, rule_c.conclusion, "", _rebase_origin(rule.origin, rho))
        for r in st.rules:
            if subsumes(r, rule):
                if inference != "input":
                    st.trace.append(SaturationEvent("subsumed", rule, (r,)))
                return
        for r in [r for r in st.rules if subsumes(rule, r)]:
            st.rules.remove(r)
            st.trace.append(SaturationEvent("deleted", r, (rule,)))
        if inference != "input":
            st.generated += 1
            rule = DeductionRule(rule.premises, rule.conclusion, f"sat{st.generated}", rule.origin)
        st.rules.append(rule)
        st.worklist.append(rule)
        if inference != "input":
            st.trace.append(SaturationEvent(inference, rule, parents))
            if st.generated > cap:
                raise SaturationCapExceeded(f"saturation generated more than {cap} rules")

    for r in rules:
        add(r)
    while st.worklist:
        rule = st.worklist.popleft()
        if rule not in st.rules:
            continue
        if not theory.is_empty:
            for new in _narrowings(rule, theory, fresh):
                add(new, (rule,), "narrow")
        for other in list(st.rules):
            if rule not in st.rules:
                break
            candidates = _closures(rule, other, fresh)
            if other is not rule:
                candidates += _closures(other, rule, fresh)
            for new in candidates:
                add(new, (new.origin[1], new.origin[2]), "closure")
    return st


def saturated_system(system: IntruderSystem, cap: int = DEFAULT_CAP) -> IntruderSystem:
    """Same theory and signature, saturated rules."""
    if system.theory is None:
        return system
    return system.with_rules(saturate(system.rules, system.theory, cap), system.name + "'")


# -- reference rule sets ----------------------------------------------------

_x, _y = Var("x"), Var("y")


def _printed(system: IntruderSystem, extra: Iterable[DeductionRule]) -> tuple[DeductionRule, ...]:
    return (*system.rules, *extra)


_SIG = I_DSKS.rule("sig")
_SIG_DEO = I_DEO.rule("sig")

PRINTED_DSKS_PRIME = _printed(
    I_DSKS,
    [
        DeductionRule((_x, sk(_y)), sig(_x, sk(_y)), "sig_sk", ("instance", _SIG, {_x: _x, _y: sk(_y)})),
        DeductionRule(
            (_x, skp(pk(_y), sig(_x, sk(_y)))),
            sig(_x, sk(_y)),
            "sig_forge",
            ("narrow", _SIG, {_x: _x, _y: skp(pk(_y), sig(_x, sk(_y)))}),
        ),
    ],
)

PRINTED_DEO_PRIME = _printed(
    I_DEO,
    [
        DeductionRule(
            (f(pk(_y), sig(_x, sk(_y))), sskp(pk(_y), sig(_x, sk(_y)))),
            sig(_x, sk(_y)),
            "sig_forge",
            (
                "narrow",
                _SIG_DEO,
                {_x: f(pk(_y), sig(_x, sk(_y))), _y: sskp(pk(_y), sig(_x, sk(_y)))},
            ),
        ),
    ],
)


# -- unfolding saturated steps ----------------------------------------------

def expand_step(step: DerivationStep, system: IntruderSystem) -> list[DerivationStep]:
    """Rewrite a step with a derived rule as steps with base rules (those
    without provenance).  Intermediate terms are normalized with the system's
    theory, so the result is checkable modulo that theory."""
    rule, sigma = step.rule, step.subst
    if rule.origin is None:
        return [step]
    kind = rule.origin[0]

    def inst(theta: dict) -> Substitution:
        return Substitution({v: apply(sigma, t) for v, t in theta.items()})

    if kind in ("narrow", "instance"):
        _, parent, theta = rule.origin
        return expand_step(DerivationStep(parent, inst(theta), step.term), system)
    _, first, second, t1, t2 = rule.origin
    s1, s2 = inst(t1), inst(t2)
    mid = system.normalize(apply(s1, first.conclusion))
    return expand_step(DerivationStep(first, s1, mid), system) + expand_step(
        DerivationStep(second, s2, step.term), system
    )


def expand_derivation(d: Derivation, system: IntruderSystem) -> Derivation:
    steps: list[DerivationStep] = []
    for s in d.steps:
        steps.extend(expand_step(s, system))
    return Derivation(d.start, tuple(steps), d.goal)
