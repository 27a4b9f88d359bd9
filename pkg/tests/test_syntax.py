from pathlib import Path

import pytest
from hypothesis import given

from keysub.rewriting import RewriteTheory, check_convergence
from keysub.solver import ConstraintSystem
from keysub.syntax import (
    DerivationFile,
    ParseError,
    ProtocolSpec,
    parse,
    parse_constraints,
    parse_term,
    render,
)
from keysub.terms import App, Var
from strategies import terms

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
ALL_FILES = sorted(p.name for p in SCENARIOS.iterdir())


def test_single_constraint_file():
    c = parse("constraints: one\ntheory: dsks\nknows: a\ndeduce: ?v1\n")
    assert isinstance(c, ConstraintSystem)
    assert len(c.constraints) == 1
    assert c.constraints[0].target == Var("v1")


def test_unclosed_parenthesis_location():
    with pytest.raises(ParseError) as info:
        parse_term("sig(a")
    assert (info.value.line, info.value.column) == (1, 4)
    assert "unclosed parenthesis" in str(info.value)


def test_arity_mismatch_rejected():
    with pytest.raises(ParseError):
        parse_term("sig(a)")


def test_knowledge_after_last_goal_rejected():
    with pytest.raises(ParseError):
        parse_constraints("constraints: c\nknows: a\ndeduce: ?v\nknows: b\n")


def test_unknown_header_rejected():
    with pytest.raises(ParseError):
        parse("nonsense: x\n")


def test_variables_with_index_parse():
    assert parse_term("?x.3") == Var("x", 3)


@pytest.mark.parametrize("name", ALL_FILES)
def test_round_trip(name):
    obj = parse((SCENARIOS / name).read_text())
    again = parse(render(obj))
    if isinstance(obj, DerivationFile):
        assert again.derivation == obj.derivation
        assert again.theory == obj.theory
    elif isinstance(obj, RewriteTheory):
        assert again.rules == obj.rules and again.name == obj.name
    else:
        assert again == obj


def test_file_kinds():
    kinds = {name: type(parse((SCENARIOS / name).read_text())) for name in ALL_FILES}
    assert kinds["kap_hy.cstr"] is ConstraintSystem
    assert kinds["kap_hy.proto"] is ProtocolSpec
    assert kinds["kap_hy_forge.deriv"] is DerivationFile
    assert kinds["dsks_custom.theory"] is RewriteTheory


def test_custom_theory_is_convergent():
    theory = parse((SCENARIOS / "dsks_custom.theory").read_text())
    assert check_convergence(theory).convergent
    assert theory.signature.is_private("sk")


@given(terms("deo"))
def test_term_round_trip(t):
    assert parse_term(render(t)) == t
