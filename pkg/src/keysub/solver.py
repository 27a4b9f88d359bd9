"""Decision procedure for constraint systems modulo a convergent theory.

Pipeline: guess normal forms by basic narrowing over the whole system
(``step1_guess``), solve the equations syntactically (``step2_unify``), then
transform the deduction constraints to solved form with the Unif / Apply
rules over the saturated rule set in the empty theory (``step3_solve``).
Every nondeterministic choice is a branch of one depth-first search.
"""
from __future__ import annotations

import itertools
import os
import time
from collections import Counter, deque
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

from .intruder import (
    Derivation,
    DeductionRule,
    IntruderSystem,
    check_derivation,
    find_derivation,
    intruder_for_theory,
)
from .narrowing import narrowing_tree, tuple_term
from .rewriting import RewriteTheory, builtin_theory
from .saturation import expand_derivation, saturate
from .terms import (
    App,
    Fresh,
    Substitution,
    Term,
    Var,
    apply,
    ordered_vars,
    vars_in,
)
from .unify import Equation, solve_system

DEFAULT_NODE_BUDGET = 1_000_000
DEFAULT_TIME_BUDGET = 120.0
BUDGET_ENV = "KEYSUB_BUDGET"
LOG_LIMIT = 10_000  # decision records kept in memory; --trace streams all of them


class SolverError(RuntimeError):
    """Malformed input or an internal consistency failure."""


class MeasureViolation(AssertionError):
    """A transformation step failed to decrease the termination measure."""


class BudgetExhausted(RuntimeError):
    pass


# -- data --------------------------------------------------------------------

@dataclass(frozen=True)
class DeductionConstraint:
    knowledge: tuple[Term, ...]
    target: Term

    def __str__(self):
        return f"{{{', '.join(map(str, self.knowledge))}}} |> {self.target}"


@dataclass(frozen=True)
class ConstraintSystem:
    constraints: tuple[DeductionConstraint, ...]
    equations: tuple[Equation, ...] = ()
    name: str = ""
    theory: str | None = None  # theory named in the source file, if any

    @property
    def kind(self) -> str:
        return "initial" if all(isinstance(c.target, Var) for c in self.constraints) else "extended"

    def is_solved(self) -> bool:
        return not self.equations and self.kind == "initial"

    @property
    def variables(self) -> set[Var]:
        terms = [t for c in self.constraints for t in (*c.knowledge, c.target)]
        terms += [s for eq in self.equations for s in eq]
        return vars_in(terms)

    def apply(self, sigma) -> "ConstraintSystem":
        cs = tuple(
            DeductionConstraint(_dedupe(apply(sigma, t) for t in c.knowledge), apply(sigma, c.target))
            for c in self.constraints
        )
        eqs = tuple((apply(sigma, u), apply(sigma, v)) for u, v in self.equations)
        return ConstraintSystem(cs, eqs, self.name, self.theory)

    def __str__(self):
        lines = [str(c) for c in self.constraints]
        lines += [f"{u} = {v}" for u, v in self.equations]
        return "\n".join(lines)


def _dedupe(ts: Iterable[Term]) -> tuple[Term, ...]:
    return tuple(dict.fromkeys(ts))


@dataclass(frozen=True)
class Wellformedness:
    ok: bool
    index: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def check_wellformed(system: ConstraintSystem) -> Wellformedness:
    """Knowledge grows monotonically and every knowledge variable was an
    earlier target."""
    produced: set[Var] = set()
    previous: set[Term] = set()
    for i, c in enumerate(system.constraints):
        known = set(c.knowledge)
        if not previous <= known:
            missing = ", ".join(sorted(map(str, previous - known)))
            return Wellformedness(False, i, f"knowledge shrinks (lost {missing})")
        stray = vars_in(c.knowledge) - produced
        if stray:
            names = ", ".join(sorted(map(str, stray)))
            return Wellformedness(False, i, f"variables {names} occur in knowledge before being deduced")
        produced |= vars_in([c.target])
        previous = known
    return Wellformedness(True)


# -- termination measure -------------------------------------------------------

def _proper_subterm(small: Term, big: Term) -> bool:
    if not isinstance(big, App):
        return False
    return any(a == small or _proper_subterm(small, a) for a in big.args)


def multiset_less(smaller: Sequence[Term], bigger: Sequence[Term]) -> bool:
    """Multiset extension of the strict subterm ordering."""
    m, n = Counter(smaller), Counter(bigger)
    if m == n:
        return False
    added, removed = m - n, n - m
    return all(any(_proper_subterm(y, x) for x in removed) for y in added)


@dataclass(frozen=True)
class Measure:
    nbv: int
    targets: tuple[Term, ...]

    @classmethod
    def of(cls, system: ConstraintSystem) -> "Measure":
        return cls(len(system.variables), tuple(c.target for c in system.constraints))

    def __lt__(self, other: "Measure") -> bool:
        if self.nbv != other.nbv:
            return self.nbv < other.nbv
        return multiset_less(self.targets, other.targets)

    def as_json(self):
        return [self.nbv, [str(t) for t in self.targets]]


# -- configuration and results -------------------------------------------------

def default_node_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise SolverError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
    return DEFAULT_NODE_BUDGET


@dataclass
class SolverConfig:
    node_budget: int = field(default_factory=default_node_budget)
    time_budget: float = DEFAULT_TIME_BUDGET
    eliminate: bool = True  # drop variables from knowledge before each step
    unif_first: bool = True
    reverse_rules: bool = False
    reverse_knowledge: bool = False
    check_measure: bool = True
    trace: Callable[[dict], None] | None = None


@dataclass
class SolverStats:
    nodes: int = 0
    guesses: int = 0
    measure_checks: int = 0
    started: float = field(default_factory=time.monotonic)

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.started


@dataclass(frozen=True)
class Solution:
    substitution: Substitution
    witnesses: tuple[Derivation, ...]
    trace: tuple[dict, ...] = ()


@dataclass(frozen=True)
class SolveResult:
    verdict: str  # SAT | UNSAT | INCONCLUSIVE
    solution: Solution | None = None
    reason: str = ""
    nodes: int = 0
    seconds: float = 0.0
    measure_checks: int = 0

    @property
    def sat(self) -> bool:
        return self.verdict == "SAT"


class _Search:
    def __init__(self, config: SolverConfig):
        self.config = config
        self.stats = SolverStats()
        self.log: deque[dict] = deque(maxlen=LOG_LIMIT)

    def emit(self, **record) -> None:
        record["node"] = self.stats.nodes
        self.log.append(record)
        if self.config.trace is not None:
            self.config.trace(record)

    def tick(self) -> None:
        self.stats.nodes += 1
        if self.stats.nodes > self.config.node_budget:
            raise BudgetExhausted(f"node budget of {self.config.node_budget} exhausted")
        if self.stats.nodes % 256 == 0 and self.stats.elapsed > self.config.time_budget:
            raise BudgetExhausted(f"time budget of {self.config.time_budget:g} s exhausted")


# -- step 1 and step 2 -----------------------------------------------------------

def encode_targets(system: ConstraintSystem, fresh: Fresh) -> ConstraintSystem:
    """Replace each non-variable target t by a fresh variable v plus v = t."""
    cs, eqs = [], list(system.equations)
    for c in system.constraints:
        if isinstance(c.target, Var):
            cs.append(c)
        else:
            v = fresh.var("goal")
            cs.append(DeductionConstraint(c.knowledge, v))
            eqs.append((v, c.target))
    return ConstraintSystem(tuple(cs), tuple(eqs), system.name, system.theory)


def step1_candidates(
    system: ConstraintSystem, theory: RewriteTheory, fresh: Fresh
) -> Iterator[tuple[ConstraintSystem, Substitution]]:
    """Every basic-narrowing descendant of the tupled system (the system
    itself first), with the substitution accumulated on its variables."""
    known: list[Term] = list(dict.fromkeys(t for c in system.constraints for t in c.knowledge))
    index = {t: i for i, t in enumerate(known)}
    targets = [c.target for c in system.constraints]
    sides = [s for eq in system.equations for s in eq]
    flat = known + targets + sides
    k, n = len(known), len(targets)
    for state in narrowing_tree(tuple_term(flat), theory, fresh):
        args = state.subject.args
        new_known, new_targets, new_sides = args[:k], args[k : k + n], args[k + n :]
        cs = tuple(
            DeductionConstraint(_dedupe(new_known[index[t]] for t in c.knowledge), new_targets[i])
            for i, c in enumerate(system.constraints)
        )
        eqs = tuple(zip(new_sides[0::2], new_sides[1::2]))
        yield ConstraintSystem(cs, eqs, system.name, system.theory), state.accumulated


def step1_guess(system: ConstraintSystem, theory: RewriteTheory, fresh: Fresh | None = None) -> Iterator[ConstraintSystem]:
    for guessed, _ in step1_candidates(system, theory, fresh or Fresh(1_000_000)):
        yield guessed


def step2_unify(system: ConstraintSystem) -> tuple[ConstraintSystem, Substitution] | None:
    """Syntactic mgu of the equations applied to the constraints, or None."""
    sigma = solve_system(system.equations)
    if sigma is None:
        return None
    solved = ConstraintSystem(system.constraints, (), system.name, system.theory).apply(sigma)
    return solved, sigma


# -- step 3 ----------------------------------------------------------------------

def eliminate_variables(knowledge: Iterable[Term], earlier: Sequence[DeductionConstraint]) -> tuple[Term, ...]:
    """Drop variables from a knowledge set; each must be the target of an
    earlier (solved) constraint."""
    produced = {c.target for c in earlier if isinstance(c.target, Var)}
    out = []
    for t in knowledge:
        if isinstance(t, Var):
            if t not in produced:
                raise SolverError(f"variable {t} in knowledge is not an earlier solved target")
            continue
        out.append(t)
    return tuple(out)


def _leftmost_unsolved(system: ConstraintSystem) -> int | None:
    for i, c in enumerate(system.constraints):
        if not isinstance(c.target, Var):
            return i
    return None


def _successors(
    system: ConstraintSystem,
    rules: Sequence[DeductionRule],
    fresh: Fresh,
    config: SolverConfig,
) -> Iterator[tuple[str, str, Substitution, ConstraintSystem]]:
    i = _leftmost_unsolved(system)
    assert i is not None
    c = system.constraints[i]
    before, after = system.constraints[:i], system.constraints[i + 1 :]
    if config.eliminate:
        knowledge = eliminate_variables(c.knowledge, before)
    else:
        knowledge = c.knowledge
    usable = list(knowledge)
    if config.reverse_knowledge:
        usable.reverse()
    t = c.target

    def unif() -> Iterator:
        for u in usable:
            sigma = solve_system([(u, t)])
            if sigma is not None:
                nxt = ConstraintSystem(before + after, (), system.name, system.theory).apply(sigma)
                yield "unif", str(u), sigma, nxt

    def apply_rules() -> Iterator:
        ordered = list(rules)[::-1] if config.reverse_rules else rules
        for rule in ordered:
            if isinstance(rule.conclusion, App) and rule.conclusion.head != getattr(t, "head", None):
                continue
            rho = fresh.renaming(ordered_vars((*rule.premises, rule.conclusion)))
            r = rule.rename(rho)
            nonvar, var_prem = r.nonvar_premises, list(dict.fromkeys(r.var_premises))
            for picks in itertools.product(usable, repeat=len(nonvar)):
                sigma = solve_system([*zip(picks, nonvar), (r.conclusion, t)])
                if sigma is None:
                    continue
                new = tuple(DeductionConstraint(knowledge, y) for y in var_prem)
                nxt = ConstraintSystem(before + new + after, (), system.name, system.theory).apply(sigma)
                yield "apply", rule.name, sigma, nxt

    phases = (unif, apply_rules) if config.unif_first else (apply_rules, unif)
    for phase in phases:
        yield from phase()


def step3_solve(
    system: ConstraintSystem,
    rules: Sequence[DeductionRule],
    config: SolverConfig | None = None,
    fresh: Fresh | None = None,
    search: _Search | None = None,
) -> Iterator[tuple[ConstraintSystem, Substitution]]:
    """Depth-first search for solved forms reachable by Unif / Apply.

    Yields (solved system, composed substitution).  The leftmost unsolved
    constraint is always the one transformed.
    """
    config = config or SolverConfig()
    fresh = fresh or Fresh(1_000_000)
    search = search or _Search(config)
    stack: list[tuple[ConstraintSystem, Substitution, int]] = [(system, Substitution(), 0)]
    while stack:
        current, acc, depth = stack.pop()
        search.tick()
        if _leftmost_unsolved(current) is None:
            search.emit(event="solved", depth=depth)
            yield current, acc
            continue
        before = Measure.of(current) if config.check_measure else None
        children = []
        for kind, detail, sigma, nxt in _successors(current, rules, fresh, config):
            if before is not None:
                after = Measure.of(nxt)
                search.stats.measure_checks += 1
                if not after < before:
                    raise MeasureViolation(
                        f"{kind} {detail} did not decrease the measure: {before} -> {after}\n{current}"
                    )
            search.emit(
                event=kind,
                detail=detail,
                depth=depth + 1,
                sigma=str(sigma),
                measure=Measure.of(nxt).as_json() if before is not None else None,
            )
            children.append((nxt, sigma.compose(acc), depth + 1))
        if not children:
            search.emit(event="fail", depth=depth)
        stack.extend(reversed(children))


# -- extraction and verification -------------------------------------------------

def _default_value(system: IntruderSystem) -> Term:
    for r in system.rules:
        if not r.premises and isinstance(r.conclusion, App) and r.conclusion.ground:
            return r.conclusion
    raise SolverError("no premise-free rule provides a default value for unconstrained variables")


def read_off(solved: ConstraintSystem, intruder: IntruderSystem) -> Substitution:
    """Ground substitution satisfying a solved form: each target variable takes
    the first non-variable member of its knowledge, in constraint order."""
    binding: dict[Var, Term] = {}
    default = None
    for c in solved.constraints:
        v = c.target
        assert isinstance(v, Var)
        if v in binding:
            continue
        candidates = [apply(binding, t) for t in c.knowledge if not isinstance(t, Var)]
        ground = [t for t in candidates if isinstance(t, App) and t.ground]
        if ground:
            binding[v] = ground[0]
        else:
            if default is None:
                default = _default_value(intruder)
            binding[v] = default
    return Substitution(binding)


def verify(
    original: ConstraintSystem,
    sigma: Substitution,
    intruder: IntruderSystem,
    saturated: Sequence[DeductionRule],
) -> tuple[Derivation, ...]:
    """Re-check a candidate solution independently of the search.

    Equations are compared after normalization; each deduction constraint
    gets a witness derivation with the original rules, replayed modulo the
    theory.  Raises SolverError if anything fails.
    """
    norm = intruder.normalize
    for u, v in original.equations:
        if norm(apply(sigma, u)) != norm(apply(sigma, v)):
            raise SolverError(f"equation {u} = {v} fails under {sigma}")
    empty = IntruderSystem(intruder.name + "'/empty", tuple(saturated), None, intruder.signature)
    witnesses = []
    for i, c in enumerate(original.constraints):
        start = tuple(norm(apply(sigma, t)) for t in c.knowledge)
        goal = norm(apply(sigma, c.target))
        if not (isinstance(goal, App) and goal.ground):
            raise SolverError(f"constraint {i}: instantiated target {goal} is not ground")
        d = find_derivation(start, goal, empty)
        if d is None:
            raise SolverError(f"constraint {i}: no derivation of {goal}")
        d = expand_derivation(d, intruder)
        check = check_derivation(d, intruder)
        if not check:
            raise SolverError(f"constraint {i}: witness rejected at step {check.failed_step}: {check.reason}")
        witnesses.append(d)
    return tuple(witnesses)


# -- driver -------------------------------------------------------------------

@lru_cache(maxsize=None)
def _saturated_builtin(name: str) -> tuple[DeductionRule, ...]:
    intruder = intruder_for_theory(builtin_theory(name))
    return tuple(saturate(intruder.rules, intruder.theory))


def resolve_theory(theory: str | RewriteTheory | None, system: ConstraintSystem) -> RewriteTheory:
    if isinstance(theory, RewriteTheory):
        return theory
    name = theory or system.theory
    if name is None:
        raise SolverError("no theory given and none named in the constraint system")
    return builtin_theory(name)


def solve(
    system: ConstraintSystem,
    theory: str | RewriteTheory | None = None,
    config: SolverConfig | None = None,
) -> SolveResult:
    config = config or SolverConfig()
    rt = resolve_theory(theory, system)
    intruder = intruder_for_theory(rt)
    if rt.name in ("dsks", "deo") and intruder.theory is rt:
        rules = _saturated_builtin(rt.name)
    else:
        rules = tuple(saturate(intruder.rules, rt))
    search = _Search(config)
    fresh = Fresh(1 + max((v.index for v in system.variables), default=0))
    encoded = encode_targets(system, fresh)
    wf = check_wellformed(encoded)
    if not wf:
        raise SolverError(f"constraint {wf.index}: {wf.reason}")
    originals = encoded.variables
    try:
        for guessed, theta1 in step1_candidates(encoded, rt, fresh):
            search.stats.guesses += 1
            search.tick()
            search.emit(event="guess", sigma=str(theta1))
            unified = step2_unify(guessed)
            if unified is None:
                search.emit(event="clash")
                continue
            c2, theta2 = unified
            search.emit(event="unify", sigma=str(theta2))
            for solved, theta3 in step3_solve(c2, rules, config, fresh, search):
                acc = theta3.compose(theta2).compose(theta1)
                ground = read_off(solved, intruder)
                final = _ground_out(ground.compose(acc), originals, intruder)
                witnesses = verify(encoded, final, intruder, rules)
                shown = final.restrict(system.variables)
                search.emit(event="sat", sigma=str(shown))
                return SolveResult(
                    "SAT",
                    Solution(shown, witnesses, tuple(search.log)),
                    nodes=search.stats.nodes,
                    seconds=search.stats.elapsed,
                    measure_checks=search.stats.measure_checks,
                )
    except BudgetExhausted as exc:
        search.emit(event="budget", reason=str(exc))
        return SolveResult(
            "INCONCLUSIVE",
            reason=str(exc),
            nodes=search.stats.nodes,
            seconds=search.stats.elapsed,
            measure_checks=search.stats.measure_checks,
        )
    search.emit(event="unsat")
    return SolveResult(
        "UNSAT", nodes=search.stats.nodes, seconds=search.stats.elapsed, measure_checks=search.stats.measure_checks
    )


def _ground_out(sigma: Substitution, variables: Iterable[Var], intruder: IntruderSystem) -> Substitution:
    """Restrict to ``variables``, send leftover variables to a default value and normalize."""
    images = {v: apply(sigma, v) for v in variables}
    leftover = vars_in(images.values())
    if leftover:
        default = _default_value(intruder)
        fill = Substitution({v: default for v in leftover})
        images = {v: apply(fill, t) for v, t in images.items()}
    return Substitution({v: intruder.normalize(t) for v, t in images.items()})
