from hypothesis import given, strategies as st

from keysub.rewriting import pk, sig, sk
from keysub.terms import App, Substitution, Var, apply, vars_of
from keysub.unify import match, mgu, solve_system
from strategies import terms

a, b, c = App("a"), App("b"), App("c")
x, y, z, u = Var("x"), Var("y"), Var("z"), Var("u")


def test_mgu_examples():
    assert mgu(x, a) == Substitution({x: a})
    assert mgu(sk(y), pk(z)) is None
    t1 = App("m")
    assert mgu(sig(x, sk(u)), sig(t1, sk(c))) == Substitution({x: t1, u: c})


def test_solve_system_examples():
    assert solve_system([(x, a), (y, x)]) == Substitution({x: a, y: a})
    assert solve_system([(x, sig(x, App("k")))]) is None
    sigma = solve_system([(sig(x, sk(y)), sig(a, sk(b))), (pk(y), pk(b))])
    assert sigma == Substitution({x: a, y: b})
    for s, t in [(sig(x, sk(y)), sig(a, sk(b))), (pk(y), pk(b))]:
        assert apply(sigma, s) == apply(sigma, t)


def test_variable_pair_binds_larger_to_smaller():
    late = Var("x", 5)
    assert mgu(late, x) == Substitution({late: x})
    assert mgu(x, late) == Substitution({late: x})


def test_match_is_one_sided():
    assert match(sig(x, y), sig(a, b)) == {x: a, y: b}
    assert match(sig(a, y), sig(x, b)) is None


@given(terms(), terms())
def test_mgu_unifies_and_is_idempotent(s, t):
    sigma = mgu(s, t)
    if sigma is not None:
        assert apply(sigma, s) == apply(sigma, t)
        assert sigma.is_idempotent()


@given(terms(), st.data())
def test_mgu_with_ground_instance_recovers_it(s, data):
    from strategies import ground_terms

    sigma = Substitution({v: data.draw(ground_terms()) for v in vars_of(s)})
    found = mgu(s, apply(sigma, s))
    assert found is not None
    assert found == sigma


@given(st.lists(st.tuples(terms(), terms()), max_size=4), st.randoms())
def test_satisfiability_independent_of_order(equations, rnd):
    shuffled = list(equations)
    rnd.shuffle(shuffled)
    first, second = solve_system(equations), solve_system(shuffled)
    assert (first is None) == (second is None)
    if first is not None:
        for s, t in equations:
            assert apply(second, s) == apply(second, t)


@given(terms(), terms())
def test_match_agrees_with_apply(pattern, term):
    sigma = match(pattern, term)
    if sigma is not None:
        assert apply(sigma, pattern) == term
