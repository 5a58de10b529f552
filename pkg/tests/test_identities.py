import random

import pytest

from pqnb.identities import (concomitant_of_sharp_flat, dC_of_BC, mixed_bracket_identity,
                             mixed_differential_identity, quadratic_differential_identity,
                             torsion_of_sharp_flat)
from pqnb.instances import poisson_and_form, random_form, form_built_instance
from pqnb.structures import Checker
from pqnb.tensor import TensorField


def vanishes(chart, residual) -> bool:
    comps = residual.items() if isinstance(residual, dict) else residual.comps.items()
    item = Checker(chart).item("residual", "", comps)
    assert item.ok, item
    return True


# -- identities for C = P# B# with P Poisson ---------------------------------------------------

@pytest.mark.parametrize("seed", range(30))
def test_sharp_flat_identities(seed):
    P, B = poisson_and_form(seed)
    assert vanishes(P.chart, concomitant_of_sharp_flat(P, B))
    assert vanishes(P.chart, torsion_of_sharp_flat(P, B))
    assert vanishes(P.chart, dC_of_BC(P, B))


def test_identities_fail_for_non_poisson_bivector():
    # the concomitant identity relies on [P,P] = 0
    from pqnb.instances import R4, E
    from pqnb.tensor import ChartManifold
    chart = ChartManifold(R4)
    P = TensorField.multivector(chart, 2, {(0, 1): E("x1", R4), (0, 2): 1})
    B = TensorField.form(chart, 2, {(1, 2): 1})
    comps = concomitant_of_sharp_flat(P, B).items()
    assert not Checker(chart).item("residual", "", comps).ok


# -- identities for a compatible pair (Q, A) with a second form -----------------------------

@pytest.mark.parametrize("seed", range(8))
def test_mixed_identities(seed):
    S = form_built_instance(seed)
    B = random_form(random.Random(500 + seed), S.chart, 2)
    assert vanishes(S.chart, mixed_bracket_identity(S.P, S.A, S.H, B))
    assert vanishes(S.chart, mixed_differential_identity(S.P, S.A, S.H, B))
    assert vanishes(S.chart, quadratic_differential_identity(S.P, S.A, S.phi, S.H, B))


def test_mixed_identities_with_zero_form():
    S = form_built_instance(2)
    zero = TensorField.form(S.chart, 2)
    assert vanishes(S.chart, mixed_bracket_identity(S.P, S.A, S.H, zero))
    assert vanishes(S.chart, quadratic_differential_identity(S.P, S.A, S.phi, S.H, zero))
