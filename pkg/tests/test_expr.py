import math
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from pqnb.expr import (DEFAULT_POLICY, Func, NearSingularError, NonZero, NormalForm, Num, ParseError,
                       SamplingExhaustedError, SamplingPolicy, Sym, UnknownSymbolError, ZeroExact,
                       ZeroNumeric, canonicalize, diff, eval_expr, evaluate, free_symbols,
                       from_normal, is_zero, parse_expr, sample_points, to_text)

from strategies import COORDS, points, rational_exprs, transcendental_exprs

X = COORDS


def P(text):
    return parse_expr(text, X)


def nf(text):
    return P(text).normal()


def _safe_normal(e):
    try:
        return e.normal()
    except ZeroDivisionError:
        return None


def _safe_eval(e, pt):
    try:
        v = eval_expr(e, pt)
    except (NearSingularError, ZeroDivisionError, OverflowError):
        return None
    return v if math.isfinite(v) and abs(v) < 1e8 else None


# -- parsing ---------------------------------------------------------------------

def test_parse_symbols():
    e = P("x1^2 + exp(x3)")
    assert free_symbols(e) == {"x1", "x3"}


def test_unknown_symbol():
    with pytest.raises(UnknownSymbolError):
        P("x4")


@pytest.mark.parametrize("text", ["x1 +", "(x1", "x1 ^ x2", "exp x1", "2 ** 3", "x1 $ 2", ""])
def test_syntax_errors_carry_position(text):
    with pytest.raises(ParseError) as info:
        P(text)
    assert info.value.pos >= 0


def test_named_subexpression():
    f = P("1 + x1^2")
    e = parse_expr("-(1/f)", X, {"f": f})
    assert e.normal() == nf("-1/(1+x1^2)")
    assert parse_expr(to_text(e), X).normal() == e.normal()


def test_unary_minus_and_negative_powers():
    assert nf("-x1^2") == -nf("x1*x1")
    assert nf("x1^-2") == nf("1/(x1*x1)")
    assert nf("2/3*x1") == NormalForm.const(Fraction(2, 3)) * NormalForm.coord("x1")


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(rational_exprs())
def test_print_parse_round_trip(e):
    n = _safe_normal(e)
    assume(n is not None)
    back = parse_expr(to_text(e), X)
    assert back.normal() == n
    # canonical text is a fixed point
    c = to_text(canonicalize(e))
    assert to_text(canonicalize(parse_expr(c, X))) == c


@settings(max_examples=300, deadline=None)
@given(transcendental_exprs())
def test_round_trip_with_kernels(e):
    n = _safe_normal(e)
    assume(n is not None)
    assert parse_expr(to_text(from_normal(n)), X).normal() == n


# -- canonical form ------------------------------------------------------------------

@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(rational_exprs(), st.lists(points, min_size=8, max_size=8))
def test_canonicalization_sound(e, pts):
    n = _safe_normal(e)
    assume(n is not None)
    c = canonicalize(e)
    for pt in pts:
        a, b = _safe_eval(e, pt), _safe_eval(c, pt)
        if a is None or b is None:
            continue
        assert b == pytest.approx(a, rel=1e-12, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(rational_exprs())
def test_canonicalize_idempotent(e):
    assume(_safe_normal(e) is not None)
    once = canonicalize(e)
    assert canonicalize(once) == once


@settings(max_examples=300, deadline=None)
@given(rational_exprs())
def test_exact_path_never_numeric(e):
    n = _safe_normal(e)
    assume(n is not None)
    v = is_zero(n, DEFAULT_POLICY, coords=list(X))
    assert isinstance(v, (ZeroExact, NonZero))


def test_kernel_arguments_are_canonical():
    assert nf("exp(x1 + x2)") == nf("exp(x2 + x1)")
    assert nf("exp(x1)*exp(x2)") == nf("exp(x1 + x2)")
    assert nf("sin(2*x1) - sin(x1 + x1)").is_zero_exact()


# -- differentiation -----------------------------------------------------------------

def test_diff_examples():
    assert diff(P("x1*x2"), "x1").normal() == nf("x2")
    assert diff(P("exp(x3)"), "x3").normal() == nf("exp(x3)")
    assert diff(P("sin(x1^2)"), "x1").normal() == nf("2*x1*cos(x1^2)")
    assert diff(P("1/(1+x1^2)"), "x1").normal() == nf("-2*x1/(1+x1^2)^2")


def _finite_difference(e, x, pt, h=1e-5):
    up, down = dict(pt), dict(pt)
    up[x] += h
    down[x] -= h
    return (eval_expr(e, up) - eval_expr(e, down)) / (2 * h)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-4, 4), st.tuples(*[st.integers(0, 5)] * 3)), min_size=1, max_size=6),
       st.sampled_from(X))
def test_diff_degree5_polynomial_matches_finite_difference(terms, x):
    text = " + ".join(f"({c})*x1^{a}*x2^{b}*x3^{d}" for c, (a, b, d) in terms if a + b + d <= 5) or "0"
    e = P(text)
    de = diff(e, x)
    pts = sample_points(SamplingPolicy(points=10), list(X))
    for pt in pts:
        fpt = {k: float(v) for k, v in pt.items()}
        fd = _finite_difference(e, x, fpt)
        exact = eval_expr(de, fpt)
        assert exact == pytest.approx(fd, rel=1e-6, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(transcendental_exprs(), transcendental_exprs(), st.sampled_from(X))
def test_diff_linear_and_leibniz(a, b, x):
    na, nb = _safe_normal(a), _safe_normal(b)
    assume(na is not None and nb is not None)
    lin = (na + nb * 3).diff(x) - na.diff(x) - nb.diff(x) * 3
    leib = (na * nb).diff(x) - na.diff(x) * nb - na * nb.diff(x)
    assert is_zero(lin, DEFAULT_POLICY, coords=list(X)).ok
    assert is_zero(leib, DEFAULT_POLICY, coords=list(X)).ok


@settings(max_examples=200, deadline=None)
@given(transcendental_exprs(), st.sampled_from(X), st.sampled_from(X))
def test_mixed_partials_commute(e, x, y):
    n = _safe_normal(e)
    assume(n is not None)
    assert n.diff(x).diff(y) == n.diff(y).diff(x)


# -- zero testing -----------------------------------------------------------------------

def test_zero_verdicts():
    assert isinstance(is_zero(nf("(x1+x2)^2 - x1^2 - 2*x1*x2 - x2^2")), ZeroExact)
    v = is_zero(nf("exp(x1+x2) - exp(x1)*exp(x2)"))
    assert isinstance(v, (ZeroExact, ZeroNumeric))
    v = is_zero(P("exp(x1)*exp(x2)").normal() - Func("exp", Sym("x1") + Sym("x2")).normal()
                + nf("sin(x1)^2 + cos(x1)^2 - 1"))
    assert isinstance(v, ZeroNumeric) and v.ok
    v = is_zero(nf("x1*x2 - x2"), coords=list(X))
    assert isinstance(v, NonZero)
    w = {k: float(val) for k, val in v.witness.items()}
    assert abs(w["x1"] * w["x2"] - w["x2"]) > 1e-9


def test_nonzero_transcendental_has_witness():
    v = is_zero(nf("sin(x1)"), coords=list(X))
    assert isinstance(v, NonZero)
    assert abs(math.sin(float(v.witness["x1"]))) > 1e-9


def test_nonvanishing_guard_and_exhaustion():
    policy = SamplingPolicy(points=4)
    x1 = nf("x1")
    pts = sample_points(policy, list(X), [x1])
    assert all(abs(float(p["x1"])) >= policy.guard for p in pts)
    with pytest.raises(SamplingExhaustedError):
        is_zero(nf("exp(x1) - exp(x1)*x1/x1 + sin(x2)"), policy, [nf("x1 - x1 + 0*x2")], list(X))


def test_policy_validation():
    with pytest.raises(ValueError):
        SamplingPolicy(points=0)
    with pytest.raises(ValueError):
        SamplingPolicy(tol=0)


def test_sampling_is_seed_deterministic():
    a = sample_points(SamplingPolicy(seed=7), list(X))
    b = sample_points(SamplingPolicy(seed=7), list(X))
    c = sample_points(SamplingPolicy(seed=8), list(X))
    assert a == b and a != c


# -- evaluation ---------------------------------------------------------------------------

def test_eval_examples():
    assert evaluate(P("x1^2"), {"x1": 3}) == 9
    with pytest.raises(NearSingularError):
        evaluate(P("1/x1"), {"x1": 0})
    assert evaluate(P("exp(x1)"), {"x1": 1}) == pytest.approx(math.e, abs=1e-12)
    assert evaluate(P("x1 + 2*x2"), (1, 2, 3), chart=X) == 5


def test_eval_positional_needs_chart():
    with pytest.raises((TypeError, ValueError)):
        evaluate(P("x1"), (1, 2, 3))


def test_num_is_exact_rational():
    assert (Num(Fraction(1, 3)) * 3).normal() == NormalForm.const(1)
