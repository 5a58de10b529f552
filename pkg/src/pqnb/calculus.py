"""Differential operators and brackets on chart tensor fields."""

from __future__ import annotations

from itertools import combinations

from .expr import ZERO, NormalForm, nf
from .tensor import (ENDO, FORM, VECTOR, CovTensor, TensorField, _need, _same_chart,
                     bivector_eval, coord_vector, endo_apply, endo_transpose_apply,
                     i_A, interior_vf, sharp, sort_sign)


def partial(f: NormalForm, chart, i: int) -> NormalForm:
    return nf(f).diff(chart.coords[i])


def ext_d(w: TensorField) -> TensorField:
    """Exterior derivative of a form (degrees above the dimension are zero)."""
    _need(w, FORM, None, "w")
    chart = w.chart
    n = chart.dim
    out: dict = {}
    for k, v in w.comps.items():
        for i in range(n):
            if i in k:
                continue
            dv = v.diff(chart.coords[i])
            if dv.is_zero_exact():
                continue
            s, sign = sort_sign((i,) + k)
            out[s] = out.get(s, ZERO) + (dv if sign > 0 else -dv)
    return TensorField.form(chart, w.degree + 1, out)


def d_function(chart, f) -> TensorField:
    return ext_d(TensorField.scalar(chart, f))


def vf_apply(X: TensorField, f) -> NormalForm:
    """Directional derivative X(f)."""
    _need(X, VECTOR, 1, "X")
    f = nf(f)
    total = ZERO
    for (i,), x in X.comps.items():
        df = f.diff(X.chart.coords[i])
        if not df.is_zero_exact():
            total = total + x * df
    return total


def vf_bracket(X: TensorField, Y: TensorField) -> TensorField:
    _need(X, VECTOR, 1, "X")
    _need(Y, VECTOR, 1, "Y")
    _same_chart(X, Y)
    n = X.chart.dim
    out = {}
    for i in range(n):
        out[(i,)] = vf_apply(X, Y[i]) - vf_apply(Y, X[i])
    return TensorField.multivector(X.chart, 1, out)


def deformed_vf_bracket(A: TensorField, X: TensorField, Y: TensorField) -> TensorField:
    """[AX, Y] + [X, AY] - A[X, Y]."""
    return (vf_bracket(endo_apply(A, X), Y) + vf_bracket(X, endo_apply(A, Y))
            - endo_apply(A, vf_bracket(X, Y)))


def lie_derivative(X: TensorField, t):
    """Lie derivative of a function, vector field or form along X."""
    if isinstance(t, TensorField) and t.kind == VECTOR and t.degree == 1:
        return vf_bracket(X, t)
    if not isinstance(t, TensorField):
        return vf_apply(X, t)
    _need(t, FORM, None, "t")
    if t.degree == 0:
        return TensorField.scalar(t.chart, vf_apply(X, t.value()))
    return interior_vf(X, ext_d(t)) + ext_d(interior_vf(X, t))


def oneform_bracket(Q: TensorField, a: TensorField, b: TensorField) -> TensorField:
    """L_{Q#a} b - L_{Q#b} a - d(Q(a, b))."""
    qa, qb = sharp(Q, a), sharp(Q, b)
    return (lie_derivative(qa, b) - lie_derivative(qb, a)
            - d_function(Q.chart, bivector_eval(Q, a, b)))


def d_A(A: TensorField, w: TensorField) -> TensorField:
    """iota_A o d - d o iota_A."""
    _need(A, ENDO, None, "A")
    _need(w, FORM, None, "w")
    first = i_A(A, ext_d(w))
    if w.degree == 0:  # iota_A vanishes on functions
        return first
    return first - ext_d(i_A(A, w))


def d_A_function(A: TensorField, f) -> TensorField:
    return d_A(A, TensorField.scalar(A.chart, f))


def lie_A(A: TensorField, X: TensorField, w: TensorField) -> TensorField:
    """iota_X o d_A + d_A o iota_X."""
    first = interior_vf(X, d_A(A, w))
    if w.degree == 0:
        return first
    return first + d_A(A, interior_vf(X, w))


def oneform_bracket_A(Q: TensorField, A: TensorField, a: TensorField, b: TensorField) -> TensorField:
    """The 1-form bracket of Q with d replaced by d_A and L by L^A."""
    qa, qb = sharp(Q, a), sharp(Q, b)
    return (lie_A(A, qa, b) - lie_A(A, qb, a)
            - d_A_function(A, bivector_eval(Q, a, b)))


def deformed_oneform_bracket(Q: TensorField, A: TensorField, a: TensorField, b: TensorField) -> TensorField:
    """[A^t a, b]_Q + [a, A^t b]_Q - A^t [a, b]_Q."""
    return (oneform_bracket(Q, endo_transpose_apply(A, a), b)
            + oneform_bracket(Q, a, endo_transpose_apply(A, b))
            - endo_transpose_apply(A, oneform_bracket(Q, a, b)))


def nijenhuis_apply(A: TensorField, X: TensorField, Y: TensorField) -> TensorField:
    """[AX, AY] - A([AX, Y] + [X, AY] - A[X, Y])."""
    AX, AY = endo_apply(A, X), endo_apply(A, Y)
    return vf_bracket(AX, AY) - endo_apply(A, deformed_vf_bracket(A, X, Y))


class VectorValued2:
    """Antisymmetric vector-valued 2-tensor, stored on increasing frame pairs."""

    def __init__(self, chart, pairs: dict):
        self.chart = chart
        self.pairs = pairs  # (i, j) with i < j -> vector field

    def __getitem__(self, ij):
        i, j = ij
        if i == j:
            return TensorField.multivector(self.chart, 1)
        if i < j:
            return self.pairs[(i, j)]
        return -self.pairs[(j, i)]

    def components(self) -> dict:
        """(k, i, j) -> coefficient of d/dx_k in the value on (d/dx_i, d/dx_j), i < j."""
        out = {}
        for (i, j), v in self.pairs.items():
            for (k,), c in v.comps.items():
                out[(k, i, j)] = c
        return out

    def __sub__(self, other):
        return VectorValued2(self.chart, {ij: self.pairs[ij] - other.pairs[ij] for ij in self.pairs})

    def is_zero_exact(self):
        return all(v.is_zero_exact() for v in self.pairs.values())


def nijenhuis_torsion(A: TensorField) -> VectorValued2:
    chart = A.chart
    n = chart.dim
    return VectorValued2(chart, {(i, j): nijenhuis_apply(A, coord_vector(chart, i), coord_vector(chart, j))
                                 for i, j in combinations(range(n), 2)})


def concomitant(P: TensorField, A: TensorField, a: TensorField, b: TensorField) -> TensorField:
    """Concomitant of a bivector and a (1,1)-tensor, six-term formula."""
    chart = P.chart
    Pa, Pb = sharp(P, a), sharp(P, b)
    Ata, Atb = endo_transpose_apply(A, a), endo_transpose_apply(A, b)
    return (lie_derivative(Pb, Ata)
            - lie_derivative(Pa, Atb)
            + endo_transpose_apply(A, lie_derivative(Pa, b))
            - endo_transpose_apply(A, lie_derivative(Pb, a))
            + d_function(chart, bivector_eval(P, Ata, b))
            - endo_transpose_apply(A, d_function(chart, bivector_eval(P, a, b))))


def concomitant_via_brackets(P: TensorField, A: TensorField, a: TensorField, b: TensorField) -> TensorField:
    """Half the difference of the d_A-bracket and the A^t-deformed bracket."""
    diff = oneform_bracket_A(P, A, a, b) - deformed_oneform_bracket(P, A, a, b)
    return diff.scale(NormalForm.const(1) / 2)


def cyclic_mixed(T: TensorField, S: TensorField | None, U: TensorField | None) -> CovTensor:
    """(X, Y, Z) -> cyclic sum of T(SX, UY, Z); ``None`` stands for the identity."""
    _need(T, FORM, 3, "T")
    chart = T.chart
    n = chart.dim
    Sm = S.matrix() if S is not None else None
    Um = U.matrix() if U is not None else None

    def col(M, i):
        if M is None:
            return [(i, None)]
        return [(a, M[a][i]) for a in range(n) if not M[a][i].is_zero_exact()]

    base = {}
    for i in range(n):
        si = col(Sm, i)
        for j in range(n):
            uj = col(Um, j)
            for k in range(n):
                v = ZERO
                for a, s in si:
                    for b, u in uj:
                        t = T[a, b, k]
                        if t.is_zero_exact():
                            continue
                        f = t
                        if s is not None:
                            f = f * s
                        if u is not None:
                            f = f * u
                        v = v + f
                if not v.is_zero_exact():
                    base[(i, j, k)] = v
    out = {}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                v = base.get((i, j, k), ZERO) + base.get((j, k, i), ZERO) + base.get((k, i, j), ZERO)
                out[(i, j, k)] = v
    return CovTensor(chart, 3, out)


def hcal(H: TensorField, A: TensorField) -> TensorField:
    """Cyclic sum of H(AX, AY, Z), returned as a 3-form."""
    t = cyclic_mixed(H, A, A)
    defects = t.antisymmetry_defects()
    if defects:
        raise ArithmeticError("cyclic sum is not antisymmetric")
    return t.to_form()


def schouten_self(P: TensorField) -> TensorField:
    """[P, P]^{ijk} = 2 sum_l (P^{il} d_l P^{jk} + P^{jl} d_l P^{ki} + P^{kl} d_l P^{ij})."""
    _need(P, VECTOR, 2, "P")
    chart = P.chart
    n = chart.dim
    dP = {}
    for (a, b), v in P.comps.items():
        for l in range(n):
            dv = v.diff(chart.coords[l])
            if not dv.is_zero_exact():
                dP[(l, a, b)] = dv

    def d(l, a, b):
        if a < b:
            return dP.get((l, a, b), ZERO)
        if a > b:
            v = dP.get((l, b, a))
            return -v if v is not None else ZERO
        return ZERO

    out = {}
    for i, j, k in combinations(range(n), 3):
        v = ZERO
        for l in range(n):
            for x, y, z in ((i, j, k), (j, k, i), (k, i, j)):
                p = P[x, l]
                if p.is_zero_exact():
                    continue
                q = d(l, y, z)
                if not q.is_zero_exact():
                    v = v + p * q
        out[(i, j, k)] = v * 2
    return TensorField.multivector(chart, 3, out)


def jacobiator(P: TensorField, i: int, j: int, k: int) -> NormalForm:
    """{x_i,{x_j,x_k}} + cyclic for the bracket {f,g} = P(df, dg)."""
    chart = P.chart

    def br(f, g):
        return bivector_eval(P, d_function(chart, f), d_function(chart, g))

    x = [chart.coord(m) for m in range(chart.dim)]
    return br(x[i], br(x[j], x[k])) + br(x[j], br(x[k], x[i])) + br(x[k], br(x[i], x[j]))
