"""Hypothesis strategies shared by the test modules."""

from fractions import Fraction

from hypothesis import strategies as st

from pqnb.expr import Add, Div, Func, Mul, Num, Pow, Sym

COORDS = ("x1", "x2", "x3")

small_fraction = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 4))


def rational_exprs(coords=COORDS, max_leaves: int = 12, division: bool = True):
    leaves = st.one_of(st.builds(Num, small_fraction), st.sampled_from([Sym(c) for c in coords]))

    def extend(children):
        options = [
            st.lists(children, min_size=2, max_size=3).map(lambda xs: Add(tuple(xs))),
            st.lists(children, min_size=2, max_size=2).map(lambda xs: Mul(tuple(xs))),
            st.builds(Pow, children, st.integers(0, 3)),
        ]
        if division:
            options.append(st.builds(Div, children, children))
        return st.one_of(*options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def transcendental_exprs(coords=COORDS):
    base = rational_exprs(coords, max_leaves=6, division=False)
    return st.one_of(base, st.builds(Func, st.sampled_from(["exp", "sin", "cos"]), base),
                     st.builds(lambda a, b: Mul((a, Func("exp", b))), base, base))


points = st.fixed_dictionaries({c: st.floats(-2, 2, allow_nan=False) for c in COORDS})
