"""Gauge transformations, constructions from 2-forms and conformal changes."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .calculus import d_function, ext_d
from .expr import ONE, ZERO, NormalForm, SamplingPolicy
from .expr.zero import DEFAULT_POLICY
from .structures import (Checker, GcStructure, PqNbStructure, VerificationReport, check_gc_background,
                         check_poisson, check_pqn, check_pqnb, tensor_comps)
from .tensor import (FORM, ChartMismatchError, CovTensor, TensorField, coord_covector,
                     form_left, i_A, interior_pair, sharp, sharp_flat, sharp_matrix,
                     wedge)


class PreconditionError(ValueError):
    """An input failed the check an operation requires; carries the report."""

    def __init__(self, message: str, report: VerificationReport | None = None):
        super().__init__(message)
        self.report = report


class VerificationFailure(RuntimeError):
    """A constructed structure failed re-verification."""

    def __init__(self, message: str, report: VerificationReport):
        super().__init__(message)
        self.report = report


def _same(a, b):
    if not a.chart.same(b.chart):
        raise ChartMismatchError("tensor fields live on different charts")


def as_two_form(t: CovTensor, policy: SamplingPolicy = DEFAULT_POLICY) -> TensorField:
    """Certify a (0,2)-tensor antisymmetric and return it as a 2-form."""
    defects = t.antisymmetry_defects()
    if defects:
        ck = Checker(t.chart, policy)
        item = ck.item("antisymmetric", "T(X,Y) = -T(Y,X)", [(k[0], v) for k, v in sorted(defects.items())])
        if not item.ok:
            raise ArithmeticError(f"(0,2)-tensor is not antisymmetric at {item.component}")
        half = NormalForm.const(1) / 2
        return TensorField.from_unordered(t.chart, FORM, 2, {k: v * half for k, v in t.comps.items()})
    return t.to_form()


def b_sub(B: TensorField, S: TensorField, policy: SamplingPolicy = DEFAULT_POLICY) -> TensorField:
    """The 2-form (X, Y) -> B(SX, Y), for S of the form P# B#."""
    return as_two_form(form_left(B, S), policy)


def _verify(S: PqNbStructure, policy, what: str):
    rep = check_pqnb(S, policy)
    if not rep.ok:
        raise VerificationFailure(f"{what} failed re-verification", rep)
    return rep


def gauge_transform(B: TensorField, S: PqNbStructure, *, trust: bool = False,
                    policy: SamplingPolicy = DEFAULT_POLICY) -> PqNbStructure:
    """(P, A + C, phi - dB_C - d(i_A B), H + dB) with C = P# B#.

    Unless ``trust`` is set the input is checked first and the output is
    re-verified.
    """
    _same(B, S)
    if not trust:
        rep = check_pqnb(S, policy)
        if not rep.ok:
            raise PreconditionError("input is not a PqNb structure", rep)
    C = sharp_flat(S.P, B)
    BC = b_sub(B, C, policy)
    out = PqNbStructure(S.chart, S.P, S.A + C,
                        S.phi - ext_d(BC) - ext_d(i_A(S.A, B)),
                        S.H + ext_d(B))
    if not trust:
        _verify(out, policy, "gauge image")
    return out


def gauge_of_poisson(P: TensorField, B: TensorField, *, trust: bool = False,
                     policy: SamplingPolicy = DEFAULT_POLICY) -> PqNbStructure:
    """(P, C, -dB_C, dB) with C = P# B#."""
    _same(P, B)
    if not trust:
        rep = check_poisson(P, policy)
        if not rep.ok:
            raise PreconditionError("P is not Poisson", rep)
    C = sharp_flat(P, B)
    BC = b_sub(B, C, policy)
    out = PqNbStructure(P.chart, P, C, -ext_d(BC), ext_d(B))
    if not trust:
        _verify(out, policy, "structure built from a 2-form")
    return out


@dataclass
class PqnResult:
    ok: bool
    structure: PqNbStructure | None
    report: VerificationReport


def background_contribution(P: TensorField, H: TensorField) -> dict:
    """Components of i_{P#a ^ P#b} H on coframe pairs."""
    chart = P.chart
    out = {}
    for i, j in combinations(range(chart.dim), 2):
        a, b = coord_covector(chart, i), coord_covector(chart, j)
        r = interior_pair(sharp(P, a), sharp(P, b), H)
        for (k,), v in r.comps.items():
            out[(i, j, k)] = v
    return out


def pqn_from_form(P: TensorField, B: TensorField, *,
                  policy: SamplingPolicy = DEFAULT_POLICY) -> PqnResult:
    """(P, C, -dB_C) when the background dB is invisible to P, else a rejection."""
    rep = check_poisson(P, policy)
    if not rep.ok:
        raise PreconditionError("P is not Poisson", rep)
    ck = Checker(P.chart, policy)
    dB = ext_d(B)
    cond = ck.item("background_invisible", "i_{P#a ^ P#b} dB = 0",
                   tensor_comps(background_contribution(P, dB)))
    rep = VerificationReport("PqN structure from a 2-form", [cond], policy)
    if not cond.ok:
        return PqnResult(False, None, rep)
    C = sharp_flat(P, B)
    BC = b_sub(B, C, policy)
    phi = -ext_d(BC)
    check = check_pqn(P, C, phi, policy)
    rep.extend(check)
    S = PqNbStructure.make(P.chart, P, C, phi)
    return PqnResult(rep.ok, S if rep.ok else None, rep)


def compose_gauges(B1: TensorField, B2: TensorField) -> TensorField:
    _same(B1, B2)
    return B1 + B2


def inverse_gauge(B: TensorField) -> TensorField:
    return -B


class NotCasimirError(PreconditionError):
    pass


def casimir_defect(P: TensorField, f) -> TensorField:
    return sharp(P, d_function(P.chart, f))


def conformal_change(P: TensorField, f, *, policy: SamplingPolicy = DEFAULT_POLICY) -> TensorField:
    """e^f P for a Casimir f, certified Poisson."""
    ck = Checker(P.chart, policy)
    item = ck.item("casimir", "P#(df) = 0", tensor_comps(casimir_defect(P, f)))
    if not item.ok:
        direction = P.chart.coords[item.component[0]]
        raise NotCasimirError(f"f is not a Casimir: P#(df) has a d/d{direction} component",
                              VerificationReport("Casimir", [item], policy))
    out = P.scale(NormalForm.func("exp", NormalForm._lift(f)))
    rep = check_poisson(out, policy)
    if not rep.ok:
        raise VerificationFailure("conformal change is not Poisson", rep)
    return out


def conformal_gauge_variants(P: TensorField, f, B: TensorField, *, trust: bool = False,
                             policy: SamplingPolicy = DEFAULT_POLICY):
    """The two PqNb structures over e^f P built from a Casimir f and a 2-form B.

    First:  (e^f P, C, e^-f (-dB_C + df ^ B_C), e^-f (dB - df ^ B))
    Second: (e^f P, e^f C, e^f (-dB_C - df ^ B_C), dB)
    with C = P# B# and B_C = B(C., .).
    """
    f = NormalForm._lift(f)
    Pf = conformal_change(P, f, policy=policy)
    chart = P.chart
    ef = NormalForm.func("exp", f)
    emf = NormalForm.func("exp", -f)
    C = sharp_flat(P, B)
    BC = b_sub(B, C, policy)
    df = d_function(chart, f)
    dB = ext_d(B)
    dBC = ext_d(BC)
    first = PqNbStructure(chart, Pf, C,
                          (-dBC + wedge(df, BC)).scale(emf),
                          (dB - wedge(df, B)).scale(emf))
    second = PqNbStructure(chart, Pf, C.scale(ef),
                           (-dBC - wedge(df, BC)).scale(ef),
                           dB)
    if not trust:
        _verify(first, policy, "first conformal variant")
        _verify(second, policy, "second conformal variant")
    return first, second


def gauge_gc(B: TensorField, J: GcStructure, *, trust: bool = False,
             policy: SamplingPolicy = DEFAULT_POLICY) -> GcStructure:
    """(A + C, P, sigma - B_C - i_A B) with background H + dB."""
    _same(B, J)
    if not trust:
        rep = check_gc_background(J, policy)
        if not rep.ok:
            raise PreconditionError("input is not a generalized complex structure", rep)
    C = sharp_flat(J.P, B)
    BC = b_sub(B, C, policy)
    out = GcStructure(J.chart, J.A + C, J.P, J.sigma - BC - i_A(J.A, B), J.H + ext_d(B))
    if not trust:
        rep = check_gc_background(out, policy)
        if not rep.ok:
            raise VerificationFailure("gauge image is not generalized complex", rep)
    return out


# -- nondegenerate classification ------------------------------------------------

class DegenerateError(PreconditionError):
    pass


def matrix_inverse(M: list) -> tuple:
    """Inverse and determinant of a square matrix of rational functions.

    Gauss-Jordan elimination with exact pivots; raises ZeroDivisionError if
    the matrix is singular as a rational-function matrix.
    """
    n = len(M)
    a = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(M)]
    det = ONE
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero_exact()), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        p = a[col][col]
        det = det * p
        inv = p.inverse()
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero_exact():
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[col])]
    return [row[n:] for row in a], det


@dataclass
class ClassifyResult:
    ok: bool
    B: TensorField | None
    report: VerificationReport


def pqnb_nondegenerate_classify(P: TensorField, A: TensorField, *,
                                policy: SamplingPolicy = DEFAULT_POLICY) -> ClassifyResult:
    """Recover B with B# = (P#)^-1 A; then (P, A, -dB_C, dB) is the PqNb structure over (P, A)."""
    chart = P.chart
    M = sharp_matrix(P).matrix()
    try:
        Minv, det = matrix_inverse(M)
    except ZeroDivisionError:
        raise DegenerateError("P is degenerate") from None
    ck = Checker(chart, policy)
    nondeg = ck.item("nondegenerate", "det P# != 0", [((), det)])
    if nondeg.ok:  # the determinant vanished at every sample point
        raise DegenerateError("determinant of P# vanishes numerically")
    n = chart.dim
    Am = A.matrix()
    F = [[sum((Minv[j][k] * Am[k][i] for k in range(n)), ZERO) for i in range(n)] for j in range(n)]
    # flat matrix entry (j, i) is B_{ij}
    cov = CovTensor(chart, 2, {(i, j): F[j][i] for i in range(n) for j in range(n)})
    defects = cov.antisymmetry_defects()
    anti = ck.item("antisymmetric", "(P#)^-1 A is the flat map of a 2-form",
                   [(k[0], v) for k, v in sorted(defects.items())])
    rep = VerificationReport("nondegenerate classification", [anti], policy)
    if not anti.ok:
        return ClassifyResult(False, None, rep)
    B = as_two_form(cov, policy)
    S = gauge_of_poisson(P, B, trust=True)
    rep.items.append(ck.item("recovers_A", "P# B# = A", tensor_comps(S.A - A)))
    rep.extend(check_pqnb(S, policy), "pqnb:")
    return ClassifyResult(rep.ok, B if rep.ok else None, rep)
