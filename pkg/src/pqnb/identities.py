"""Residuals of the tensor identities behind the gauge construction.

Every function returns a residual tensor (left side minus right side); the
identity holds when all components vanish.  Vector-valued 2-tensors are
returned as dicts keyed ``(k, i, j)`` over frame pairs ``i < j``.
"""

from __future__ import annotations

from itertools import combinations

from .calculus import (concomitant, cyclic_mixed, d_A, ext_d, nijenhuis_apply, vf_bracket)
from .tensor import (CovTensor, TensorField, coord_covector, coord_vector, endo_apply,
                     endo_compose, form_both, form_left, i_A, interior_pair, sharp, sharp_flat)


def _pairs(chart):
    return combinations(range(chart.dim), 2)


def _vv(chart, fn) -> dict:
    out = {}
    for i, j in _pairs(chart):
        for (k,), v in fn(coord_vector(chart, i), coord_vector(chart, j)).comps.items():
            out[(k, i, j)] = v
    return out


def _covector_pairs(chart, fn) -> dict:
    out = {}
    for i, j in _pairs(chart):
        for (k,), v in fn(coord_covector(chart, i), coord_covector(chart, j)).comps.items():
            out[(i, j, k)] = v
    return out


def _d_cov(t: CovTensor) -> tuple:
    """(d of the antisymmetric part, antisymmetry defect) for a (0,2)-tensor."""
    defects = CovTensor(t.chart, 2, {k: v for (k, _), v in t.antisymmetry_defects().items()})
    return ext_d(t.to_form()), defects


# -- P Poisson, C = P# B# ------------------------------------------------------------

def concomitant_of_sharp_flat(P: TensorField, B: TensorField) -> dict:
    """C_{P,C}(a, b) + i_{P#a ^ P#b} dB."""
    C = sharp_flat(P, B)
    dB = ext_d(B)
    return _covector_pairs(P.chart, lambda a, b: concomitant(P, C, a, b)
                           + interior_pair(sharp(P, a), sharp(P, b), dB))


def torsion_of_sharp_flat(P: TensorField, B: TensorField) -> dict:
    """N_C(X, Y) - P#(i_{CX^Y} dB + i_{X^CY} dB - i_{X^Y} dB_C)."""
    C = sharp_flat(P, B)
    dB = ext_d(B)
    dBC, _ = _d_cov(form_left(B, C))

    def res(X, Y):
        CX, CY = endo_apply(C, X), endo_apply(C, Y)
        rhs = interior_pair(CX, Y, dB) + interior_pair(X, CY, dB) - interior_pair(X, Y, dBC)
        return nijenhuis_apply(C, X, Y) - sharp(P, rhs)
    return _vv(P.chart, res)


def dC_of_BC(P: TensorField, B: TensorField) -> CovTensor:
    """d_C B_C - (cyclic dB(CX, CY, Z) - dB_{C^2})."""
    C = sharp_flat(P, B)
    BC = form_left(B, C)
    BCC = form_left(B, endo_compose(C, C))
    dBC2, d1 = _d_cov(BCC)
    _, d0 = _d_cov(BC)
    lhs = CovTensor.from_form(d_A(C, BC.to_form()))
    rhs = cyclic_mixed(ext_d(B), C, C) - dBC2
    return lhs - rhs + _lift3(d0) + _lift3(d1)


def _lift3(defect: CovTensor) -> CovTensor:
    """Embed an antisymmetry defect into the degree-3 residual (index padded with -1)."""
    return CovTensor(defect.chart, 3, {k + (-1,): v for k, v in defect.comps.items()}) if defect.comps else \
        CovTensor(defect.chart, 3)


# -- compatible pair (Q, A) with background H ----------------------------------------------

def mixed_bracket_identity(Q: TensorField, A: TensorField, H: TensorField, B: TensorField) -> dict:
    """Symmetrized mixed torsion of A and C = Q# B# against its closed form."""
    C = sharp_flat(Q, B)
    dB = ext_d(B)
    diAB = ext_d(i_A(A, B))

    def res(X, Y):
        AX, AY, CX, CY = (endo_apply(A, X), endo_apply(A, Y), endo_apply(C, X), endo_apply(C, Y))
        XY = vf_bracket(X, Y)
        lhs = (vf_bracket(AX, CY) - endo_apply(A, vf_bracket(CX, Y)) - endo_apply(A, vf_bracket(X, CY))
               + endo_apply(A, endo_apply(C, XY))
               + vf_bracket(CX, AY) - endo_apply(C, vf_bracket(AX, Y)) - endo_apply(C, vf_bracket(X, AY))
               + endo_apply(C, endo_apply(A, XY)))
        rhs = (interior_pair(AX, Y, dB) + interior_pair(X, AY, dB) - interior_pair(X, Y, diAB)
               + interior_pair(CX, Y, H) + interior_pair(X, CY, H))
        return lhs - sharp(Q, rhs)
    return _vv(Q.chart, res)


def mixed_differential_identity(Q: TensorField, A: TensorField, H: TensorField, B: TensorField) -> CovTensor:
    """d_A B_C + d_C(i_A B) against the cyclic sums and exact corrections."""
    C = sharp_flat(Q, B)
    dB = ext_d(B)
    _, d0 = _d_cov(form_left(B, C))
    dBAC, d1 = _d_cov(form_left(B, endo_compose(A, C)))
    BC_form = form_left(B, C).to_form()
    lhs = CovTensor.from_form(d_A(A, BC_form) + d_A(C, i_A(A, B)))
    rhs = (cyclic_mixed(H, C, C) + cyclic_mixed(dB, A, C) + cyclic_mixed(dB, C, A)
           - dBAC - CovTensor.from_form(ext_d(i_A(endo_compose(C, A), B))))
    return lhs - rhs + _lift3(d0) + _lift3(d1)


def quadratic_differential_identity(Q: TensorField, A: TensorField, phi: TensorField,
                                    H: TensorField, B: TensorField) -> CovTensor:
    """d_A(i_A B) against cyclic sums, dB_{A,A} and i_C phi."""
    C = sharp_flat(Q, B)
    dB = ext_d(B)
    BAA = form_both(B, A, A)
    dBAA, d0 = _d_cov(BAA)
    lhs = CovTensor.from_form(d_A(A, i_A(A, B)))
    rhs = (cyclic_mixed(H, A, C) + cyclic_mixed(H, C, A) + cyclic_mixed(dB, A, A)
           - dBAA + CovTensor.from_form(i_A(C, phi)))
    return lhs - rhs + _lift3(d0)
