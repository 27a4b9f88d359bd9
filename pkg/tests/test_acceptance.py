"""Acceptance criteria 1 to 8, each at its stated time limit.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``; either way one PASS/FAIL line is
printed per criterion.
"""
import random
import time
from pathlib import Path

import pytest

from acceptance_log import record
from keysub.cli import main as cli_main
from keysub.experiments import (
    ClosureConfig,
    NarrowingBoundConfig,
    AgreementConfig,
    SolverSamplingConfig,
    closure_agreement,
    equation_agreement,
    narrowing_bound,
    replay_solution,
    solver_sampling,
)
from keysub.intruder import I_DEO, I_DSKS, DeductionRule, check_derivation
from keysub.protocol import compile as compile_protocol
from keysub.rewriting import DEO, DSKS, check_convergence, critical_pairs, f, pk, sig, sk, skp, sskp
from keysub.sampling import planted_system, unsat_system
from keysub.saturation import is_variant_rule, saturate
from keysub.solver import MeasureViolation, SolverConfig, solve
from keysub.syntax import parse
from keysub.terms import App, Var

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_1_convergence():
    with Clock() as clock:
        reports = {t.name: check_convergence(t) for t in (DSKS, DEO)}
        unjoined = [
            (t.name, s, u) for t in (DSKS, DEO) for s, u in critical_pairs(t) if t.normalize(s) != t.normalize(u)
        ]
    ok = all(r.convergent for r in reports.values()) and not unjoined and clock.seconds < 1
    pairs = sum(r.critical_pair_count for r in reports.values())
    record(1, "built-in theories convergent", ok, f"{pairs} critical pairs all join, {clock.seconds:.2f}s (limit 1s)")
    assert ok


def test_criterion_2_equations_agree_with_rules():
    with Clock() as clock:
        report = equation_agreement(AgreementConfig(instances=500))
    ok = not report.mismatches and clock.seconds < 5
    record(2, "equations agree with rewrite rules", ok,
           f"{report.checked} instances, {len(report.mismatches)} mismatches, {clock.seconds:.2f}s (limit 5s)")
    assert ok


x, y = Var("x"), Var("y")
DSKS_FORGE = DeductionRule((x, skp(pk(y), sig(x, sk(y)))), sig(x, sk(y)))
DEO_FORGE = DeductionRule((f(pk(y), sig(x, sk(y))), sskp(pk(y), sig(x, sk(y)))), sig(x, sk(y)))


def test_criterion_3_saturation_reproduction():
    with Clock() as clock:
        present = {
            "dsks": any(is_variant_rule(r, DSKS_FORGE) for r in saturate(I_DSKS.rules, DSKS)),
            "deo": any(is_variant_rule(r, DEO_FORGE) for r in saturate(I_DEO.rules, DEO)),
        }
        pairs = (("saturated", "printed"), ("saturated/empty", "printed/empty"))
        reports = [r for name in ("dsks", "deo") for r in closure_agreement(name, pairs, ClosureConfig(samples=100))]
    bad = sum(len(r.discrepancies) for r in reports)
    ok = all(present.values()) and bad == 0 and clock.seconds < 60
    goals = sum(r.goals for r in reports)
    record(3, "saturation reproduces the forging rules", ok,
           f"rules present {present}, {goals} goal checks over 100 sets per theory, "
           f"{bad} discrepancies, {clock.seconds:.2f}s (limit 60s)")
    assert ok


def test_criterion_4_narrowing_length_bound():
    with Clock() as clock:
        reports = [narrowing_bound(name, NarrowingBoundConfig(terms=1000, max_size=12)) for name in ("dsks", "deo")]
    bad = sum(len(r.violations) for r in reports)
    ok = bad == 0 and clock.seconds < 120
    record(4, "narrowing derivations bounded by term size", ok,
           f"{sum(r.terms for r in reports)} terms, longest {max(r.longest for r in reports)}, "
           f"{bad} violations, {clock.seconds:.2f}s (limit 120s)")
    assert ok


def test_criterion_5_closure_equivalences():
    with Clock() as clock:
        pairs = (("original", "saturated"), ("saturated", "saturated/empty"))
        reports = [r for name in ("dsks", "deo") for r in closure_agreement(name, pairs, ClosureConfig(samples=100, seed=1))]
    bad = sum(len(r.discrepancies) for r in reports)
    ok = bad == 0 and clock.seconds < 120
    record(5, "closure equivalences", ok,
           f"{sum(r.goals for r in reports)} goal checks, {bad} discrepancies, {clock.seconds:.2f}s (limit 120s)")
    assert ok


def _same_up_to_constants(found, expected, constants):
    """Equal after some injective renaming of the given constants."""
    table = {}

    def walk(s, t):
        if isinstance(s, Var) or isinstance(t, Var):
            return s == t
        if not s.args and not t.args and t.head in constants:
            return table.setdefault(t.head, s.head) == s.head
        return s.head == t.head and len(s.args) == len(t.args) and all(map(walk, s.args, t.args))

    return walk(found, expected) and len(set(table.values())) == len(table)


def test_criterion_6_kap_hy(capsys):
    path = SCENARIOS / "kap_hy.cstr"
    with Clock() as clock:
        code = cli_main(["solve", str(path), "--theory", "dsks"])
        out = capsys.readouterr().out
        system = parse(path.read_text())
        result = solve(system, "dsks")
    ua = App("ua")
    expected = skp(pk(App("b")), sig(ua, sk(App("b"))))
    forged = result.solution.substitution[Var("ske")] if result.sat else None
    witnesses_ok = result.sat and all(check_derivation(w, I_DSKS) for w in result.solution.witnesses)
    ok = (
        code == 0
        and out.splitlines()[0] == "SAT"
        and forged is not None
        and _same_up_to_constants(forged, expected, {"ua", "b"})
        and witnesses_ok
        and replay_solution(system, result.solution)
        and clock.seconds < 60
    )
    record(6, "KAP-HY attack found", ok,
           f"exit {code}, ?ske := {forged}, {len(result.solution.witnesses) if result.sat else 0} witnesses valid, "
           f"{clock.seconds:.2f}s (limit 60s)")
    assert ok


def _corpus():
    for path in sorted(SCENARIOS.glob("*.cstr")):
        yield path.name, parse(path.read_text())
    spec = parse((SCENARIOS / "kap_hy.proto").read_text())
    for run in compile_protocol(spec):
        yield " ".join(run.interleaving), run.system
    rng = random.Random(2024)
    for i in range(100):
        theory = ("dsks", "deo")[i % 2]
        yield f"planted {i}", planted_system(rng, theory).system
        yield f"unsat {i}", unsat_system(rng, theory)


def test_criterion_7_measure_audit():
    checks = violations = systems = 0
    variants = (SolverConfig(), SolverConfig(reverse_rules=True, unif_first=False), SolverConfig(eliminate=False))
    with Clock() as clock:
        for _, system in _corpus():
            systems += 1
            for config in variants:
                config.check_measure = True
                try:
                    checks += solve(system, config=config).measure_checks
                except MeasureViolation:
                    violations += 1
    ok = violations == 0 and checks > 0
    record(7, "termination measure decreases", ok,
           f"{systems} systems x {len(variants)} search orders, {checks} steps checked, "
           f"{violations} violations, {clock.seconds:.2f}s")
    assert ok


def test_criterion_8_soundness_completeness_sampling():
    with Clock() as clock:
        report = solver_sampling(SolverSamplingConfig(planted=100, unsat=50))
    ok = (
        report.planted_sat == report.planted == 100
        and report.unsat_unsat == report.unsat == 50
        and not report.failures
        and not report.measure_violations
        and clock.seconds < 300
    )
    record(8, "planted SAT and underivable UNSAT", ok,
           f"{report.planted_sat}/{report.planted} planted SAT with replayed witnesses, "
           f"{report.unsat_unsat}/{report.unsat} UNSAT, {clock.seconds:.2f}s (limit 300s)")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
