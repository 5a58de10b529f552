import pytest

from pqnb.calculus import ext_d
from pqnb.expr import NormalForm
from pqnb.instances import (E, gc_reduction_example, lifted_first_example_constraint,
                            reduction_block_instance)
from pqnb.reduction import (AdaptedReductionSetup, ReductionError, check_gauge_projectable,
                            check_gc_reduction_hypotheses,
                            check_reduction_hypotheses, gauge_reduce_commute, reduction_identity_checks,
                            project_form, reduce, reduce_gc)
from pqnb.structures import GcStructure, PqNbStructure, check_gc_background, check_pqnb
from pqnb.tensor import ChartManifold, TensorField

COORDS = ("q1", "q2", "s", "c")
CHART = ChartManifold(COORDS)
SETUP = AdaptedReductionSetup(CHART, ("q1", "q2"), ("s",), ("c",), (0,))


def x(text):
    return E(text, COORDS)


# -- setup validation ---------------------------------------------------------------

def test_setup_must_partition_coordinates():
    with pytest.raises(ValueError):
        AdaptedReductionSetup(CHART, ("q1",), ("s",), ("c",))
    with pytest.raises(ValueError):
        AdaptedReductionSetup(CHART, (), ("q1", "q2", "s"), ("c",))
    with pytest.raises(ValueError):
        AdaptedReductionSetup(CHART, ("q1", "q2"), ("s",), ("c",), (0, 1))


def test_setup_blocks():
    assert SETUP.tangent == [0, 1, 2] and SETUP.transverse == [2, 3]
    assert SETUP.quotient_chart().coords == ("q1", "q2")


# -- hypotheses ---------------------------------------------------------------------------

def test_scalar_multiple_of_identity_projects():
    # hypotheses and projection only look at the block shape, not at the axioms
    P = TensorField.multivector(CHART, 2, {(0, 1): 1})
    A = TensorField.identity(CHART, x("q1^2 + q2"))
    S = PqNbStructure.make(CHART, P, A)
    rep = check_reduction_hypotheses(SETUP, S)
    assert rep.ok and rep.item("(i)").note == "sufficient surrogate"
    red = reduce(SETUP, S)
    assert red.A.equals_exact(TensorField.identity(red.chart, E("q1^2 + q2", ("q1", "q2"))))


def test_s_dependent_bivector_fails_first_hypothesis():
    P = TensorField.multivector(CHART, 2, {(0, 1): x("s")})
    S = PqNbStructure.make(CHART, P)
    rep = check_reduction_hypotheses(SETUP, S)
    assert [it.label for it in rep.failed()] == ["(i)"]
    with pytest.raises(ReductionError) as err:
        reduce(SETUP, S)
    assert err.value.labels == ["(i)"]


def test_cross_term_fails_second_hypothesis():
    P = TensorField.multivector(CHART, 2, {(0, 3): 1})
    rep = check_reduction_hypotheses(SETUP, PqNbStructure.make(CHART, P))
    assert not rep.item("(ii)").ok


def test_cross_term_vanishing_on_N_is_accepted():
    P = TensorField.multivector(CHART, 2, {(0, 3): x("c")})
    assert check_reduction_hypotheses(SETUP, PqNbStructure.make(CHART, P)).item("(ii)").ok


def test_lifted_first_example_fails_background_hypothesis():
    setup, S = lifted_first_example_constraint()
    assert check_pqnb(S).ok
    rep = check_reduction_hypotheses(setup, S)
    assert [it.label for it in rep.failed()] == ["(iv)"]


def test_chart_mismatch_is_rejected():
    setup, _ = lifted_first_example_constraint()
    with pytest.raises(ValueError):
        check_reduction_hypotheses(setup, PqNbStructure.make(CHART, TensorField.multivector(CHART, 2)))


# -- block instances ------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_block_instances_reduce(seed):
    setup, S, _ = reduction_block_instance(seed)
    assert check_pqnb(S).ok
    assert check_reduction_hypotheses(setup, S).ok
    red = reduce(setup, S)
    assert red.chart.coords == setup.q
    rep = check_pqnb(red)
    assert rep.ok, rep.text()
    lem = reduction_identity_checks(setup, S, red, probe=True)
    assert lem.ok, lem.text()


def test_probe_adds_second_extension_items():
    setup, S, _ = reduction_block_instance(0)
    red = reduce(setup, S)
    labels = [it.label for it in reduction_identity_checks(setup, S, red, probe=True).items]
    assert "P pairing (second extension)" in labels
    labels = [it.label for it in reduction_identity_checks(setup, S, red, probe=False).items]
    assert "P pairing (second extension)" not in labels


def test_identity_reduces_to_identity():
    S = PqNbStructure.make(CHART, TensorField.multivector(CHART, 2, {(0, 1): 1}), TensorField.identity(CHART))
    red = reduce(SETUP, S)
    assert red.A.equals_exact(TensorField.identity(red.chart))
    assert red.P[0, 1] == NormalForm.const(1)


# -- generalized complex reduction -----------------------------------------------------------

def test_gc_reduction_example():
    setup, J = gc_reduction_example()
    assert check_gc_background(J).ok
    out = reduce_gc(setup, J)
    assert out.report.ok and out.report.item("(a)").ok and out.report.item("(b)").ok
    red = out.reduced
    assert red.chart.coords == ("q1", "q2")
    assert check_gc_background(red).ok
    assert red.A.is_zero_exact() and red.P[0, 1] == NormalForm.const(1)


def test_gc_reduction_rejects_sigma_cross_term():
    setup, J = gc_reduction_example()
    extra = TensorField.form(J.chart, 2, {(0, 2): 1})  # dq1 ^ ds1
    shifted = GcStructure(J.chart, J.A, J.P, J.sigma + extra, J.H)
    hyp = check_gc_reduction_hypotheses(setup, shifted)
    assert [it.label for it in hyp.failed()] == ["(a)"]
    # the cross term also breaks the structure itself, which reduce_gc checks first
    with pytest.raises(ReductionError) as err:
        reduce_gc(setup, shifted)
    assert "(5)" in err.value.labels


# -- gauge and reduction commute -------------------------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_gauge_and_reduce_commute(seed):
    setup, S, G = reduction_block_instance(seed)
    assert check_gauge_projectable(setup, G).ok
    res = gauge_reduce_commute(setup, S, G)
    assert res.ok, res.report.text()
    assert res.gauge_then_reduce.equals_exact(res.reduce_then_gauge) or res.report.item("diagram").ok


def test_zero_gauge_commutes():
    setup, S, _ = reduction_block_instance(0)
    res = gauge_reduce_commute(setup, S, TensorField.form(S.chart, 2))
    assert res.ok


def test_non_projectable_gauge_is_reported():
    setup, S, _ = reduction_block_instance(0)
    B = TensorField.form(S.chart, 2, {(0, 2): 1})  # dq1 ^ ds
    res = gauge_reduce_commute(setup, S, B)
    assert not res.ok and not res.report.item("gauge (a)").ok
    assert res.gauge_then_reduce is None


def test_project_form_reads_q_components_on_section():
    B = TensorField.form(CHART, 2, {(0, 1): x("q1 + s + c"), (2, 3): 1})
    out = project_form(SETUP, B)
    assert out[0, 1] == E("q1", ("q1", "q2"))
    assert ext_d(out).degree == 3
