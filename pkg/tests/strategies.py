"""Hypothesis strategies shared by the test modules."""
from hypothesis import strategies as st

from keysub.terms import App, Var

SYMBOLS = {
    "dsks": [("sig", 2), ("ver", 3), ("skp", 2), ("pkp", 2), ("pk", 1), ("sk", 1)],
    "deo": [("sig", 2), ("ver", 3), ("sskp", 2), ("ppkp", 2), ("f", 2), ("pk", 1), ("sk", 1)],
}
CONSTANTS = [App(c) for c in ("a", "b", "c", "m", "0", "1")]
VARIABLES = [Var(n) for n in ("x", "y", "z", "w")]


def terms(theory: str = "dsks", variables: bool = True, max_leaves: int = 8):
    leaves = st.sampled_from(CONSTANTS + (VARIABLES if variables else []))

    def extend(children):
        return st.one_of(
            [st.tuples(*[children] * n).map(lambda args, h=h: App(h, args)) for h, n in SYMBOLS[theory]]
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def ground_terms(theory: str = "dsks", max_leaves: int = 8):
    return terms(theory, variables=False, max_leaves=max_leaves)


theories = st.sampled_from(["dsks", "deo"])
