import json
import random
from pathlib import Path

import pytest

from keysub.experiments import replay_solution
from keysub.intruder import I_DSKS
from keysub.rewriting import DSKS, ONE, pk, pkp, sig, sk, skp, ver
from keysub.sampling import planted_system, unsat_system
from keysub.saturation import saturate
from keysub.solver import (
    BUDGET_ENV,
    ConstraintSystem,
    DeductionConstraint,
    Measure,
    SolverConfig,
    SolverError,
    check_wellformed,
    default_node_budget,
    eliminate_variables,
    multiset_less,
    read_off,
    solve,
    step1_candidates,
    step1_guess,
    step2_unify,
    step3_solve,
)
from keysub.syntax import parse
from keysub.terms import App, Fresh, Var, apply

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
a, b, pub = App("a"), App("b"), App("pub")
v1, v2, v9, s, w, x, z = (Var(n) for n in ("v1", "v2", "v9", "s", "w", "x", "z"))


def system(constraints, equations=(), theory="dsks"):
    return ConstraintSystem(
        tuple(DeductionConstraint(tuple(k), t) for k, t in constraints), tuple(equations), "test", theory
    )


def test_wellformedness_examples():
    assert check_wellformed(system([([a], v1)]))
    assert not check_wellformed(system([([a, b], v1), ([a], v2)]))
    assert not check_wellformed(system([([v9], v1)]))


def test_step1_ground_irreducible_is_unchanged():
    c = system([([a], sig(a, sk(b)))])
    assert list(step1_guess(c, DSKS)) == [c]


def test_step1_narrows_verification_equation():
    c = system([([a], w)], [(ver(x, w, z), ONE)])
    assert c in list(step1_guess(c, DSKS))
    hits = [
        theta
        for guessed, theta in step1_candidates(c, DSKS, Fresh(100))
        if guessed.equations and guessed.equations[0] == (ONE, ONE)
    ]
    assert hits
    for theta in hits:
        assert DSKS.normalize(apply(theta, ver(x, w, z))) == ONE
    # rule 1 instance: w is an honest signature on x, z the matching public key
    assert any(
        isinstance(theta[w], App) and theta[w].head == "sig" and theta[z] == pk(theta[w].args[1].args[0])
        for theta in hits
        if theta.get(z) is not None and theta[w].args[1].head == "sk"
    )


def test_step2_examples():
    c = system([([a], v1)])
    assert step2_unify(c)[0] == c
    unified, sigma = step2_unify(system([([a], v1)], [(ONE, ONE)]))
    assert not unified.equations and len(sigma) == 0
    assert step2_unify(system([([a], v1)], [(pk(v2), sk(v9))])) is None


def test_eliminate_variables_examples():
    earlier = (DeductionConstraint((a,), v1), DeductionConstraint((a,), v2))
    assert eliminate_variables((a, v1), earlier) == (a,)
    assert eliminate_variables((a, b), earlier) == (a, b)
    assert eliminate_variables((v1, v2), earlier) == ()
    with pytest.raises(SolverError):
        eliminate_variables((v9,), earlier)


RULES = tuple(saturate(I_DSKS.rules, DSKS))


def test_step3_examples():
    solved = next(step3_solve(system([([a], v1)]), RULES))
    assert read_off(solved[0], I_DSKS)[v1] == a
    assert next(step3_solve(system([([a, sk(b)], sig(a, sk(b)))]), RULES, fresh=Fresh(100)), None) is not None
    assert next(step3_solve(system([([a], sk(b))]), RULES, fresh=Fresh(100)), None) is None


def test_solve_examples():
    result = solve(system([([a], v1)]))
    assert result.sat and result.solution.substitution[v1] == a
    assert solve(system([([pub], v1)], [(v1, sk(b))])).verdict == "UNSAT"
    forged = pkp(pk(b), sig(a, sk(b)))
    result = solve(system([([sig(a, sk(b)), pk(b)], v1)], [(ver(a, s, forged), ONE), (v1, s)]))
    assert result.sat
    assert result.solution.substitution[s] == sig(a, sk(b))
    assert solve(system([([a, sk(b)], sig(a, sk(b)))])).sat


@pytest.mark.parametrize("name", ["kap_hy", "forged_verification", "deo_forge", "private_key"])
def test_scenarios(name):
    expected = {"private_key": "UNSAT"}.get(name, "SAT")
    c = parse((SCENARIOS / f"{name}.cstr").read_text())
    result = solve(c)
    assert result.verdict == expected
    if result.sat:
        assert replay_solution(c, result.solution)


def test_kap_hy_forged_key():
    c = parse((SCENARIOS / "kap_hy.cstr").read_text())
    sol = solve(c).solution.substitution
    ua = App("ua")
    assert sol[Var("ske")] == skp(pk(b), sig(ua, sk(b)))
    assert sol[Var("pke")] == pkp(pk(b), sig(ua, sk(b)))


def test_measure_ordering():
    assert multiset_less([a], [sig(a, b)])
    assert multiset_less([a, b], [sig(a, b)])
    assert not multiset_less([sig(a, b)], [a])
    assert not multiset_less([a], [a])
    assert Measure(1, (sig(a, b),)) < Measure(2, (a,))


def test_budget_gives_inconclusive():
    c = parse((SCENARIOS / "kap_hy.cstr").read_text())
    result = solve(c, config=SolverConfig(node_budget=3))
    assert result.verdict == "INCONCLUSIVE"
    assert "budget" in result.reason


def test_budget_environment_variable(monkeypatch):
    monkeypatch.setenv(BUDGET_ENV, "42")
    assert default_node_budget() == 42
    assert SolverConfig().node_budget == 42
    monkeypatch.setenv(BUDGET_ENV, "lots")
    with pytest.raises(SolverError):
        default_node_budget()


def test_trace_records_are_json():
    records = []
    c = parse((SCENARIOS / "forged_verification.cstr").read_text())
    solve(c, config=SolverConfig(trace=records.append))
    events = {r["event"] for r in records}
    assert {"guess", "sat"} <= events
    for r in records:
        json.dumps(r)
        assert isinstance(r["node"], int)


def _corpus(n=30, seed=5):
    rng = random.Random(seed)
    out = []
    for i in range(n):
        theory = ("dsks", "deo")[i % 2]
        out.append(planted_system(rng, theory).system)
        out.append(unsat_system(rng, theory))
    return out


@pytest.mark.parametrize(
    "variant",
    [
        dict(reverse_rules=True),
        dict(reverse_knowledge=True),
        dict(unif_first=False),
        dict(eliminate=False),
    ],
    ids=["rules", "knowledge", "apply-first", "no-eliminate"],
)
def test_verdict_independent_of_search_order(variant):
    for c in _corpus():
        assert solve(c).verdict == solve(c, config=SolverConfig(**variant)).verdict, c


def test_planted_solutions_replay():
    rng = random.Random(11)
    for i in range(20):
        planted = planted_system(rng, ("dsks", "deo")[i % 2])
        result = solve(planted.system)
        assert result.sat
        assert replay_solution(planted.system, result.solution)
        # the planted assignment is itself a solution of the equations
        norm = I_DSKS.normalize if planted.system.theory == "dsks" else None
        if norm is not None:
            for u, v in planted.system.equations:
                assert norm(apply(planted.solution, u)) == norm(apply(planted.solution, v))
