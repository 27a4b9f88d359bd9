import pytest
from hypothesis import given, settings

from keysub.rewriting import (
    DEO,
    DSKS,
    EQUATIONS,
    ONE,
    R_DEO,
    R_DSKS,
    RewriteBudgetExceeded,
    RewriteRule,
    RewriteTheory,
    builtin_theory,
    check_convergence,
    critical_pairs,
    f,
    pk,
    sig,
    sk,
    skp,
    sskp,
    theory_signature,
    ver,
)
from keysub.terms import App, Var, vars_of
from strategies import ground_terms, terms

a, b = App("a"), App("b")
x = Var("x")


def test_builtins_have_four_rules():
    assert len(R_DSKS) == 4 and len(R_DEO) == 4


def test_rules_do_not_introduce_variables():
    for rule in (*R_DSKS, *R_DEO):
        assert vars_of(rule.rhs) <= vars_of(rule.lhs)


def test_normalize_examples():
    assert DSKS.normalize(ver(a, sig(a, sk(b)), pk(b))) == ONE
    assert DSKS.normalize(sig(a, skp(pk(b), sig(a, sk(b))))) == sig(a, sk(b))
    assert DSKS.normalize(a) == a
    forged = sig(f(pk(b), sig(a, sk(b))), sskp(pk(b), sig(a, sk(b))))
    assert DEO.normalize(forged) == sig(a, sk(b))


def test_normalize_below_root():
    t = ver(a, sig(a, skp(pk(b), sig(a, sk(b)))), pk(b))
    assert DSKS.normalize(t) == ONE


def test_literal_equations_agree():
    for name in ("dsks", "deo"):
        theory = builtin_theory(name)
        for lhs, rhs in EQUATIONS[name]:
            assert theory.normalize(lhs) == theory.normalize(rhs)


def test_critical_pairs_empty_for_disjoint_heads():
    rules = (RewriteRule(App("g", [x]), x), RewriteRule(App("h", [x]), x))
    theory = RewriteTheory("free", rules, theory_signature(rules))
    assert critical_pairs(theory) == []


@pytest.mark.parametrize("theory", [DSKS, DEO], ids=["dsks", "deo"])
def test_critical_pairs_join(theory):
    pairs = critical_pairs(theory)
    assert pairs
    for s, t in pairs:
        assert theory.normalize(s) == theory.normalize(t)


@pytest.mark.parametrize("theory", [DSKS, DEO], ids=["dsks", "deo"])
def test_builtins_convergent(theory):
    report = check_convergence(theory)
    assert report.terminating and report.locally_confluent
    assert report.precedence is not None


def test_nonterminating_rule_reported_unknown():
    rule = RewriteRule(App("g", [x]), App("g", [App("g", [x])]))
    theory = RewriteTheory("loop", (rule,), theory_signature((rule,)))
    report = check_convergence(theory)
    assert report.terminating is None
    assert report.locally_confluent
    assert str(report) == "terminating: unknown, locally_confluent: yes"
    with pytest.raises(RewriteBudgetExceeded):
        theory.normalize(App("g", [a]), max_steps=50)


@settings(max_examples=300)
@given(ground_terms("dsks", max_leaves=12))
def test_normalize_idempotent_dsks(t):
    n = DSKS.normalize(t)
    assert DSKS.normalize(n) == n
    assert DSKS.is_normal(n)


@settings(max_examples=300)
@given(ground_terms("deo", max_leaves=12))
def test_normalize_idempotent_deo(t):
    n = DEO.normalize(t)
    assert DEO.normalize(n) == n


@settings(max_examples=1000)
@given(terms("dsks", max_leaves=12))
def test_strategy_independence_dsks(t):
    assert DSKS.normalize(t) == DSKS.normalize_outermost(t)


@settings(max_examples=1000)
@given(terms("deo", max_leaves=12))
def test_strategy_independence_deo(t):
    assert DEO.normalize(t) == DEO.normalize_outermost(t)
