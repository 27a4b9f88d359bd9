from keysub.intruder import I_DEO, I_DSKS, DeductionRule, Derivation, check_derivation, find_derivation
from keysub.rewriting import EMPTY_THEORY, DEO, DSKS, f, pk, sig, sk, skp, sskp
from keysub.saturation import (
    PRINTED_DEO_PRIME,
    PRINTED_DSKS_PRIME,
    canonical_rule,
    expand_derivation,
    is_variant_rule,
    saturate,
    saturate_with_trace,
    saturated_system,
    subsumes,
)
from keysub.terms import App, Var

x, y, z, u = Var("x"), Var("y"), Var("z"), Var("u")
a, b = App("a"), App("b")

DSKS_FORGE = DeductionRule((x, skp(pk(y), sig(x, sk(y)))), sig(x, sk(y)))
DEO_FORGE = DeductionRule((f(pk(y), sig(x, sk(y))), sskp(pk(y), sig(x, sk(y)))), sig(x, sk(y)))


def contains_variant(rules, rule):
    return any(is_variant_rule(r, rule) for r in rules)


def test_subsumption_examples():
    assert subsumes(DeductionRule((x, y), sig(x, y)), DeductionRule((x, y, z), sig(x, y)))
    assert not subsumes(DeductionRule((x,), App("1")), DeductionRule((y,), App("0")))
    renamed = DEO_FORGE.rename({x: u, y: z})
    assert subsumes(renamed, DEO_FORGE) and subsumes(DEO_FORGE, renamed)


def test_dsks_saturation_contains_forging_rule():
    rules = saturate(I_DSKS.rules, DSKS)
    assert contains_variant(rules, DSKS_FORGE)
    assert set(I_DSKS.rules) <= set(rules)


def test_deo_saturation_contains_forging_rule():
    rules = saturate(I_DEO.rules, DEO)
    assert contains_variant(rules, DEO_FORGE)
    assert set(I_DEO.rules) <= set(rules)


def test_empty_theory_saturation_is_identity():
    assert tuple(saturate(I_DSKS.rules, EMPTY_THEORY)) == I_DSKS.rules


def test_printed_sets_include_forging_rules():
    assert contains_variant(PRINTED_DSKS_PRIME, DSKS_FORGE)
    assert contains_variant(PRINTED_DEO_PRIME, DEO_FORGE)


def test_no_rule_subsumes_another():
    for theory, system in ((DSKS, I_DSKS), (DEO, I_DEO)):
        rules = saturate(system.rules, theory)
        for i, r in enumerate(rules):
            for j, s in enumerate(rules):
                if i != j:
                    assert not subsumes(r, s), (r, s)


def test_saturation_is_a_fixpoint():
    for theory, system in ((DSKS, I_DSKS), (DEO, I_DEO)):
        once = saturate(system.rules, theory)
        twice = saturate(once, theory)
        assert len(once) == len(twice)
        assert all(contains_variant(twice, r) for r in once)


def test_trace_records_inferences():
    state = saturate_with_trace(I_DSKS.rules, DSKS)
    assert any("narrow" in str(e) for e in state.trace)
    assert len(state.rules) == len(saturate(I_DSKS.rules, DSKS))


def test_canonical_rule_names():
    rule, _ = canonical_rule(DSKS_FORGE.rename({x: Var("p", 4), y: Var("q", 9)}))
    assert str(rule) == "?x, skp(pk(?y), sig(?x, sk(?y))) -> sig(?x, sk(?y))"


def test_expanded_witness_uses_base_rules():
    system = saturated_system(I_DSKS)
    start = (a, skp(pk(b), sig(a, sk(b))))
    d = find_derivation(start, sig(a, sk(b)), system.empty_theory())
    assert d is not None
    expanded = expand_derivation(d, system)
    base = {r.name for r in I_DSKS.rules}
    assert all(step.rule.name in base for step in expanded.steps)
    assert check_derivation(expanded, I_DSKS)
    assert isinstance(expanded, Derivation)
