"""Sampling experiments shared by ``scripts/`` and the acceptance suite.

Every experiment takes a dataclass config with an explicit seed and returns a
report dataclass; nothing here prints.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .intruder import IntruderSystem, builtin_intruder, check_derivation, closure, default_universe
from .narrowing import max_derivation_length
from .rewriting import EQUATIONS, builtin_theory
from .sampling import (
    candidate_goals,
    narrowable_term,
    planted_system,
    random_knowledge,
    random_term,
    unsat_system,
)
from .saturation import PRINTED_DEO_PRIME, PRINTED_DSKS_PRIME, saturated_system
from .solver import MeasureViolation, SolverConfig, SolverError, solve
from .terms import apply, size, vars_in

THEORIES = ("dsks", "deo")
PRINTED = {"dsks": PRINTED_DSKS_PRIME, "deo": PRINTED_DEO_PRIME}


# -- equations against rewrite rules --------------------------------------------

@dataclass
class AgreementConfig:
    instances: int = 500
    max_size: int = 5
    seed: int = 0


@dataclass
class AgreementReport:
    checked: int = 0
    mismatches: list = field(default_factory=list)


def equation_agreement(config: AgreementConfig = AgreementConfig()) -> AgreementReport:
    """Both sides of every equation normalize identically, literally and on
    random ground instances (per equation)."""
    rng = random.Random(config.seed)
    report = AgreementReport()
    for name in THEORIES:
        theory = builtin_theory(name)
        for lhs, rhs in EQUATIONS[name]:
            instances = [{}]
            vs = sorted(vars_in([lhs, rhs]), key=lambda v: v.key)
            for _ in range(config.instances):
                instances.append({v: random_term(rng, name, config.max_size) for v in vs})
            for sigma in instances:
                left, right = apply(sigma, lhs), apply(sigma, rhs)
                report.checked += 1
                if theory.normalize(left) != theory.normalize(right):
                    report.mismatches.append((name, left, right))
    return report


# -- narrowing length ----------------------------------------------------------

@dataclass
class NarrowingBoundConfig:
    terms: int = 1000
    max_size: int = 12
    seed: int = 0


@dataclass
class NarrowingBoundReport:
    theory: str
    terms: int = 0
    longest: int = 0
    violations: list = field(default_factory=list)


def narrowing_bound(theory_name: str, config: NarrowingBoundConfig = NarrowingBoundConfig()) -> NarrowingBoundReport:
    """Exhaust the basic narrowing tree of random terms; record any derivation
    longer than the starting term's size."""
    rng = random.Random(f"{config.seed}/{theory_name}")
    theory = builtin_theory(theory_name)
    report = NarrowingBoundReport(theory_name)
    for _ in range(config.terms):
        t = narrowable_term(rng, theory_name, config.max_size)
        n = max_derivation_length(t, theory)
        report.terms += 1
        report.longest = max(report.longest, n)
        if n > size(t):
            report.violations.append((t, n))
    return report


# -- closure agreement ----------------------------------------------------------

@dataclass
class ClosureConfig:
    samples: int = 100
    max_terms: int = 4
    max_size: int = 6
    goal_size: int = 6
    seed: int = 0


@dataclass
class ClosureReport:
    theory: str
    comparison: tuple[str, str]
    samples: int = 0
    goals: int = 0
    discrepancies: list = field(default_factory=list)


def _systems(theory_name: str) -> dict[str, IntruderSystem]:
    original = builtin_intruder(theory_name)
    saturated = saturated_system(original)
    printed = original.with_rules(PRINTED[theory_name], f"{theory_name}-printed")
    return {
        "original": original,
        "saturated": saturated,
        "saturated/empty": saturated.empty_theory(),
        "printed": printed,
        "printed/empty": printed.empty_theory(),
    }


def closure_agreement(
    theory_name: str,
    pairs: tuple[tuple[str, str], ...],
    config: ClosureConfig = ClosureConfig(),
) -> list[ClosureReport]:
    """For random normal ground knowledge, compare deducibility of every
    candidate goal under pairs of systems, all inside one shared universe.

    System names: original, saturated, saturated/empty, printed, printed/empty.
    """
    rng = random.Random(f"{config.seed}/{theory_name}")
    systems = _systems(theory_name)
    base = systems["original"]
    reports = [ClosureReport(theory_name, p) for p in pairs]
    needed = {name for p in pairs for name in p}
    for _ in range(config.samples):
        knowledge = random_knowledge(rng, theory_name, config.max_terms, config.max_size)
        goals = candidate_goals(knowledge, base, config.goal_size)
        universe = default_universe(knowledge, goals, base)
        closed = {name: closure(knowledge, systems[name], universe) for name in needed}
        for report in reports:
            left, right = report.comparison
            report.samples += 1
            report.goals += len(goals)
            for g in goals:
                a, b = g in closed[left], g in closed[right]
                if a != b:
                    report.discrepancies.append((tuple(knowledge), g, a, b))
    return reports


# -- solver sampling ------------------------------------------------------------

@dataclass
class SolverSamplingConfig:
    planted: int = 100
    unsat: int = 50
    max_constraints: int = 4
    max_size: int = 10
    seed: int = 0


@dataclass
class SolverSamplingReport:
    planted: int = 0
    planted_sat: int = 0
    unsat: int = 0
    unsat_unsat: int = 0
    failures: list = field(default_factory=list)
    measure_violations: list = field(default_factory=list)
    measure_checks: int = 0
    seconds: float = 0.0


def solver_sampling(config: SolverSamplingConfig = SolverSamplingConfig()) -> SolverSamplingReport:
    """Planted satisfiable systems and systems with an underivable goal,
    alternating between the two built-in theories."""
    rng = random.Random(config.seed)
    report = SolverSamplingReport()
    started = time.perf_counter()
    for i in range(config.planted):
        name = THEORIES[i % 2]
        planted = planted_system(rng, name, config.max_constraints, config.max_size)
        verdict = _run(planted.system, report)
        report.planted += 1
        if verdict == "SAT":
            report.planted_sat += 1
        else:
            report.failures.append(("planted", planted.system, verdict))
    for i in range(config.unsat):
        name = THEORIES[i % 2]
        system = unsat_system(rng, name, config.max_constraints)
        verdict = _run(system, report)
        report.unsat += 1
        if verdict == "UNSAT":
            report.unsat_unsat += 1
        else:
            report.failures.append(("unsat", system, verdict))
    report.seconds = time.perf_counter() - started
    return report


def _run(system, report: SolverSamplingReport) -> str:
    try:
        result = solve(system, config=SolverConfig(check_measure=True))
    except MeasureViolation as exc:
        report.measure_violations.append((system, str(exc)))
        return "MEASURE"
    except SolverError as exc:
        report.failures.append(("error", system, str(exc)))
        return "ERROR"
    report.measure_checks += result.measure_checks
    if result.sat and not replay_solution(system, result.solution):
        return "BAD-WITNESS"
    return result.verdict


def replay_solution(system, solution) -> bool:
    """Independent re-check of a SAT answer: equations hold after
    normalization and every witness replays to its instantiated target."""
    intruder = builtin_intruder(system.theory)
    sigma = solution.substitution
    norm = intruder.normalize
    if any(norm(apply(sigma, u)) != norm(apply(sigma, v)) for u, v in system.equations):
        return False
    if len(solution.witnesses) != len(system.constraints):
        return False
    for c, w in zip(system.constraints, solution.witnesses):
        if w.goal != norm(apply(sigma, c.target)):
            return False
        if set(w.start) != {norm(apply(sigma, t)) for t in c.knowledge}:
            return False
        if not check_derivation(w, intruder):
            return False
    return True


__all__ = [
    "AgreementConfig",
    "AgreementReport",
    "ClosureConfig",
    "ClosureReport",
    "NarrowingBoundConfig",
    "NarrowingBoundReport",
    "SolverSamplingConfig",
    "SolverSamplingReport",
    "closure_agreement",
    "equation_agreement",
    "narrowing_bound",
    "replay_solution",
    "solver_sampling",
]
