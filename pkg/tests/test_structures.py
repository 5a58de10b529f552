import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqnb.calculus import ext_d
from pqnb.expr import SamplingPolicy, ZeroExact, ZeroNumeric
from pqnb.gauge import gauge_gc
from pqnb.instances import (E, R3, complex_gc, first_example, gc_corpus, pn_example, random_form,
                            random_vector, symplectic_gc)
from pqnb.structures import (GcStructure, PqNbStructure, bfield_map, check_gc_background,
                             check_gc_integrability_direct, check_pn, check_poisson, check_pqnb,
                             check_sigma_shift, courant_bracket, courant_bracket_H,
                             courant_compat_residual)
from pqnb.tensor import (ChartManifold, GeneralizedSection, KindError, TensorField, all_zero,
                         coord_covector, coord_vector)

R = ChartManifold(R3)
seeds = st.integers(0, 10**6)


def x(text):
    return E(text, R3)


def section(vector=None, covector=None):
    return GeneralizedSection.make(R, vector, covector)


# -- Poisson ------------------------------------------------------------------------------

def test_check_poisson_examples():
    assert check_poisson(first_example().P).ok
    R4 = ChartManifold(("x1", "x2", "x3", "x4"))
    assert check_poisson(TensorField.multivector(R4, 2, {(0, 1): 1, (2, 3): 1})).ok
    bad = check_poisson(TensorField.multivector(R, 2, {(0, 1): x("x1"), (0, 2): 1}))
    assert not bad.ok
    assert bad.item("poisson").component == (0, 1, 2)


# -- PqNb checker -----------------------------------------------------------------------------

def test_first_example_passes_with_exact_rational_items():
    rep = check_pqnb(first_example())
    assert rep.ok, rep.text()
    assert [it.label for it in rep.items] == ["closed_phi", "closed_H", "poisson", "A_P_compat",
                                              "concomitant", "torsion", "dA_phi"]
    assert all(isinstance(it.verdict, ZeroExact) for it in rep.items)


@pytest.mark.parametrize("f,g", [("1+x1^2", "x3"), ("2+x2^2", "x3^2"), ("1", "exp(x3)"),
                                 ("1+x1^2+x2^2", "sin(x3)")])
def test_first_example_family(f, g):
    assert check_pqnb(first_example(f, g)).ok


def test_halved_phi_fails_torsion():
    rep = check_pqnb(first_example(phi_scale=Fraction(1, 2)))
    assert not rep.ok
    assert [it.label for it in rep.failed()] == ["torsion"]
    item = rep.item("torsion")
    assert item.verdict.witness and item.component is not None


def test_poisson_alone_is_pqnb():
    P = first_example().P
    assert check_pqnb(PqNbStructure.make(P.chart, P)).ok
    assert check_pn(P, TensorField.endo(P.chart)).ok


def test_pn_example():
    S = pn_example()
    rep = check_pn(S.P, S.A)
    assert rep.ok, rep.text()
    assert all(isinstance(it.verdict, (ZeroExact, ZeroNumeric)) for it in rep.items)


def test_structure_rejects_wrong_kinds():
    S = first_example()
    with pytest.raises(KindError):
        PqNbStructure(S.chart, S.A, S.A, S.phi, S.H)


def test_reports_are_deterministic():
    S = pn_example()
    p = SamplingPolicy(seed=11)
    assert check_pqnb(S, p).to_json() == check_pqnb(S, p).to_json()
    doc = json.loads(check_pqnb(first_example(phi_scale=Fraction(1, 2)), p).to_json())
    assert doc["seed"] == 11 and not doc["ok"]
    failed = [it for it in doc["items"] if not it["ok"]]
    assert failed[0]["label"] == "torsion" and "witness" in failed[0]


def test_report_text_mentions_every_item():
    text = check_pqnb(first_example()).text()
    for label in ("closed_phi", "torsion", "dA_phi", "overall: PASS"):
        assert label in text


# -- Courant brackets -------------------------------------------------------------------------

def test_courant_examples():
    d1, d2 = coord_vector(R, 0), coord_vector(R, 1)
    assert courant_bracket(section(d1), section(d2)).is_zero_exact()
    mu = section(d1, coord_covector(R, 1))
    assert courant_bracket(mu, section(d2)).is_zero_exact()
    vol = TensorField.form(R, 3, {(0, 1, 2): 1})
    br = courant_bracket_H(section(d1), section(d2), vol)
    assert br.vector.is_zero_exact() and br.covector.equals_exact(-coord_covector(R, 2))


def test_courant_hand_expansion():
    # [x2 d1 + x1 dx3, d3 + x3 dx1]: vector part [x2 d1, d3] = 0
    mu = section(coord_vector(R, 0).scale(x("x2")), coord_covector(R, 2).scale(x("x1")))
    nu = section(coord_vector(R, 2), coord_covector(R, 0).scale(x("x3")))
    br = courant_bracket(mu, nu)
    # L_X b = x2 d(x3) ... computed: L_{x2 d1}(x3 dx1) = x3 dx2 ; L_{d3}(x1 dx3) = 0
    # 1/2 d(a(Y) - b(X)) = 1/2 d(x1 - x2 x3)
    expected = (coord_covector(R, 1).scale(x("x3"))
                + coord_covector(R, 0).scale(x("1/2"))
                - coord_covector(R, 1).scale(x("x3/2")) - coord_covector(R, 2).scale(x("x2/2")))
    assert br.vector.is_zero_exact()
    assert br.covector.equals_exact(expected)


def test_bfield_examples():
    rng = random.Random(1)
    mu = section(random_vector(rng, R), random_form(rng, R, 1))
    zero = TensorField.form(R, 2)
    assert (bfield_map(zero, mu) - mu).is_zero_exact()
    B = TensorField.form(R, 2, {(1, 2): 1})
    img = bfield_map(B, section(coord_vector(R, 1)))
    assert img.vector.equals_exact(coord_vector(R, 1)) and img.covector.equals_exact(coord_covector(R, 2))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_bfield_inverse(seed):
    rng = random.Random(seed)
    mu = section(random_vector(rng, R), random_form(rng, R, 1))
    B = random_form(rng, R, 2)
    assert (bfield_map(-B, bfield_map(B, mu)) - mu).is_zero_exact()


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_courant_compatibility(seed):
    rng = random.Random(seed)
    mu = section(random_vector(rng, R), random_form(rng, R, 1))
    nu = section(random_vector(rng, R), random_form(rng, R, 1))
    B, H = random_form(rng, R, 2), random_form(rng, R, 3)
    assert courant_compat_residual(B, H, mu, nu).is_zero_exact()


# -- generalized complex structures ---------------------------------------------------------------

@pytest.mark.parametrize("dim", [2, 4])
def test_symplectic_and_complex_pass_both_checkers(dim):
    for J in (symplectic_gc(dim), complex_gc(dim)):
        assert check_gc_background(J).ok
        assert check_gc_integrability_direct(J).ok


def test_symplectic_sign_is_forced():
    J = symplectic_gc(2)
    flipped = GcStructure(J.chart, J.A, J.P, -J.sigma, J.H)
    rep = check_gc_background(flipped)
    assert [it.label for it in rep.failed()] == ["(5)"]
    direct = check_gc_integrability_direct(flipped)
    assert [it.label for it in direct.failed()] == ["J_squared"]


def test_gauged_symplectic_passes():
    J = symplectic_gc(4)
    rng = random.Random(3)
    B = ext_d(random_form(rng, J.chart, 1))
    G = gauge_gc(B, J)
    assert check_gc_background(G).ok and check_gc_integrability_direct(G).ok
    assert not G.A.is_zero_exact()


def test_gc_structures_give_pqnb_structures():
    for name, J in gc_corpus(20, seed=5):
        if check_gc_background(J).ok:
            assert check_pqnb(J.pqnb()).ok, name


def test_background_sign_convention():
    """With a non-closed gauge form the direct checker needs the opposite twist."""
    J = symplectic_gc(4)
    B = TensorField.form(J.chart, 2, {(0, 2): x4("x1*x2"), (1, 3): x4("x3")})
    assert not ext_d(B).is_zero_exact()
    G = gauge_gc(B, J)
    assert check_gc_background(G).ok
    assert not check_gc_integrability_direct(G).ok
    assert check_gc_integrability_direct(G, background_sign=-1).ok
    with pytest.raises(ValueError):
        check_gc_integrability_direct(G, background_sign=2)


def x4(text):
    return E(text, ("x1", "x2", "x3", "x4"))


# -- sigma shifts ----------------------------------------------------------------------------------------

def test_sigma_shift_examples():
    J = complex_gc(4)
    assert check_sigma_shift(J, TensorField.form(J.chart, 2))
    good = TensorField.form(J.chart, 2, {(0, 2): 1, (1, 3): -1})
    assert check_sigma_shift(J, good)
    shifted = GcStructure(J.chart, J.A, J.P, J.sigma + good, J.H)
    assert check_gc_background(shifted).ok
    bad = TensorField.form(J.chart, 2, {(0, 2): 1, (1, 3): 1})
    assert not check_sigma_shift(J, bad)

    J2 = complex_gc(2)
    assert not check_sigma_shift(J2, TensorField.form(J2.chart, 2, {(0, 1): 1}))
    S = symplectic_gc(2)
    res = check_sigma_shift(S, TensorField.form(S.chart, 2, {(0, 1): 3}))
    assert not res and not res.report.item("P_omega").ok


def test_sigma_shift_rejects_non_closed():
    J = complex_gc(4)
    with pytest.raises(ValueError):
        check_sigma_shift(J, TensorField.form(J.chart, 2, {(0, 1): x4("x3")}))


def test_zero_check_helper():
    assert all_zero(TensorField.form(R, 2))
