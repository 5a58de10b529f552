"""Tensor fields on a single coordinate chart.

Components are :class:`~pqnb.expr.NormalForm` scalars stored sparsely: a
missing key means a zero component.  Indices are 0-based internally.

Conventions (pinned by the worked examples):

* ``<beta, sharp(P, alpha)> = P(alpha, beta)``
* ``flat(B, X) = iota_X B``
* endomorphism entry ``(i, j)`` multiplies ``d/dx_i (x) dx_j``
* ``iota_{X^Y} w = iota_Y iota_X w``
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Callable, Iterable, Mapping, Sequence

from .expr import ONE, ZERO, NormalForm, SamplingPolicy, is_zero, nf
from .expr.zero import DEFAULT_POLICY

VECTOR = "vector"
FORM = "form"
ENDO = "endo"


class ChartMismatchError(ValueError):
    pass


class KindError(TypeError):
    pass


@dataclass(frozen=True)
class ChartManifold:
    coords: tuple
    nonvanishing: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "nonvanishing", tuple(nf(g) for g in self.nonvanishing))
        if not self.coords:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("coordinate names must be distinct")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        return self.coords.index(name)

    def coord(self, i: int) -> NormalForm:
        return NormalForm.coord(self.coords[i])

    def with_nonvanishing(self, extra: Iterable) -> "ChartManifold":
        keep = list(self.nonvanishing)
        for g in extra:
            g = nf(g)
            if g not in keep:
                keep.append(g)
        return ChartManifold(self.coords, tuple(keep))

    def same(self, other: "ChartManifold") -> bool:
        return self.coords == other.coords


def sort_sign(idx: Sequence[int]):
    """Return (sorted tuple, sign) or (None, 0) if an index repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return None, 0
    sign = 1
    # bubble sort is fine for k <= 6
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return tuple(idx), sign


def _clean(comps: Mapping) -> dict:
    return {k: v for k, v in comps.items() if not v.is_zero_exact()}


class TensorField:
    """Multivector, differential form or (1,1)-tensor on a chart."""

    __slots__ = ("chart", "kind", "degree", "comps")

    def __init__(self, chart: ChartManifold, kind: str, degree: int, comps: Mapping | None = None):
        if kind not in (VECTOR, FORM, ENDO):
            raise KindError(f"unknown tensor kind {kind!r}")
        n = chart.dim
        if kind == ENDO:
            degree = 1
        elif degree < 0:
            raise ValueError(f"negative degree {degree}")
        self.chart = chart
        self.kind = kind
        self.degree = degree
        out = {}
        for k, v in (comps or {}).items():
            k = tuple(k)
            v = nf(v)
            if v.is_zero_exact():
                continue
            if any(not 0 <= i < n for i in k):
                raise IndexError(f"index {k} out of range for dimension {n}")
            if kind == ENDO:
                if len(k) != 2:
                    raise IndexError("endomorphism entries need two indices")
            else:
                if len(k) != degree:
                    raise IndexError(f"expected {degree} indices, got {k}")
                if any(a >= b for a, b in zip(k, k[1:])):
                    raise IndexError(f"index tuple {k} must be strictly increasing")
            out[k] = v
        self.comps = out

    # -- constructors -----------------------------------------------------
    @classmethod
    def form(cls, chart, degree, comps=None):
        return cls(chart, FORM, degree, comps)

    @classmethod
    def multivector(cls, chart, degree, comps=None):
        return cls(chart, VECTOR, degree, comps)

    @classmethod
    def endo(cls, chart, comps=None):
        return cls(chart, ENDO, 1, comps)

    @classmethod
    def from_unordered(cls, chart, kind, degree, comps: Mapping):
        """Build from components on arbitrary index orders (antisymmetrized by sign)."""
        out: dict = {}
        for k, v in comps.items():
            s, sign = sort_sign(k)
            if s is None:
                continue
            out[s] = out.get(s, ZERO) + (nf(v) if sign > 0 else -nf(v))
        return cls(chart, kind, degree, out)

    @classmethod
    def scalar(cls, chart, f):
        return cls(chart, FORM, 0, {(): f})

    @classmethod
    def identity(cls, chart, factor=ONE):
        return cls.endo(chart, {(i, i): factor for i in range(chart.dim)})

    def zero_like(self) -> "TensorField":
        return TensorField(self.chart, self.kind, self.degree)

    # -- access -----------------------------------------------------------
    def __getitem__(self, idx) -> NormalForm:
        idx = tuple(idx) if not isinstance(idx, int) else (idx,)
        if self.kind == ENDO:
            return self.comps.get(idx, ZERO)
        s, sign = sort_sign(idx)
        if s is None:
            return ZERO
        v = self.comps.get(s, ZERO)
        return v if sign > 0 else -v

    def value(self) -> NormalForm:
        """Scalar value of a degree-0 form."""
        if self.kind != FORM or self.degree != 0:
            raise KindError("value() needs a 0-form")
        return self.comps.get((), ZERO)

    def matrix(self) -> list:
        if self.kind != ENDO:
            raise KindError("matrix() needs an endomorphism")
        n = self.chart.dim
        return [[self.comps.get((i, j), ZERO) for j in range(n)] for i in range(n)]

    def vector(self) -> list:
        if self.kind not in (VECTOR, FORM) or self.degree != 1:
            raise KindError("vector() needs a vector field or 1-form")
        return [self.comps.get((i,), ZERO) for i in range(self.chart.dim)]

    def index_tuples(self):
        n = self.chart.dim
        if self.kind == ENDO:
            return list(product(range(n), repeat=2))
        return list(combinations(range(n), self.degree))

    # -- algebra ----------------------------------------------------------
    def _check(self, other: "TensorField"):
        if not isinstance(other, TensorField):
            raise TypeError("expected a tensor field")
        if not self.chart.same(other.chart):
            raise ChartMismatchError("tensor fields live on different charts")
        if (self.kind, self.degree) != (other.kind, other.degree):
            raise KindError(f"cannot combine {self.describe()} with {other.describe()}")

    def __add__(self, other):
        self._check(other)
        out = dict(self.comps)
        for k, v in other.comps.items():
            out[k] = out[k] + v if k in out else v
        return TensorField(self.chart, self.kind, self.degree, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return TensorField(self.chart, self.kind, self.degree, {k: -v for k, v in self.comps.items()})

    def scale(self, f) -> "TensorField":
        f = nf(f)
        if f.is_zero_exact():
            return self.zero_like()
        return TensorField(self.chart, self.kind, self.degree, {k: f * v for k, v in self.comps.items()})

    def __rmul__(self, f):
        return self.scale(f)

    def map(self, fn: Callable[[NormalForm], NormalForm]) -> "TensorField":
        return TensorField(self.chart, self.kind, self.degree, {k: fn(v) for k, v in self.comps.items()})

    def subs(self, mapping) -> "TensorField":
        return self.map(lambda v: v.subs(mapping))

    def is_zero_exact(self) -> bool:
        return not self.comps

    def equals_exact(self, other) -> bool:
        return (self - other).is_zero_exact()

    def describe(self) -> str:
        if self.kind == ENDO:
            return "(1,1)-tensor"
        return f"{'multivector' if self.kind == VECTOR else 'form'} of degree {self.degree}"

    def __repr__(self):
        body = ", ".join(f"{k}: {v.text()}" for k, v in sorted(self.comps.items()))
        return f"TensorField({self.describe()}; {{{body}}})"


class CovTensor:
    """(0,k)-tensor with no symmetry assumed, stored on full index tuples."""

    __slots__ = ("chart", "degree", "comps")

    def __init__(self, chart: ChartManifold, degree: int, comps: Mapping | None = None):
        self.chart = chart
        self.degree = degree
        self.comps = {tuple(k): nf(v) for k, v in (comps or {}).items() if not nf(v).is_zero_exact()}

    @classmethod
    def from_form(cls, w: TensorField) -> "CovTensor":
        _need_form(w)
        out = {}
        for k, v in w.comps.items():
            for perm in permutations(range(len(k))):
                idx = tuple(k[p] for p in perm)
                _, sign = sort_sign(perm)
                out[idx] = v if sign > 0 else -v
        return cls(w.chart, w.degree, out)

    def __getitem__(self, idx) -> NormalForm:
        return self.comps.get(tuple(idx), ZERO)

    def index_tuples(self):
        return list(product(range(self.chart.dim), repeat=self.degree))

    def __add__(self, other):
        other = _as_cov(other)
        if other.degree != self.degree or not self.chart.same(other.chart):
            raise KindError("cannot add tensors of different type")
        out = dict(self.comps)
        for k, v in other.comps.items():
            out[k] = out[k] + v if k in out else v
        return CovTensor(self.chart, self.degree, out)

    def __radd__(self, other):
        return _as_cov(other) + self

    def __neg__(self):
        return CovTensor(self.chart, self.degree, {k: -v for k, v in self.comps.items()})

    def __sub__(self, other):
        return self + (-_as_cov(other))

    def __rsub__(self, other):
        return _as_cov(other) + (-self)

    def scale(self, f):
        f = nf(f)
        return CovTensor(self.chart, self.degree, {k: f * v for k, v in self.comps.items()})

    def antisymmetry_defects(self) -> dict:
        """Components of T + T∘(transposition) for every adjacent slot swap."""
        out = {}
        for idx in self.index_tuples():
            for a in range(self.degree - 1):
                sw = list(idx)
                sw[a], sw[a + 1] = sw[a + 1], sw[a]
                v = self[idx] + self[tuple(sw)]
                if not v.is_zero_exact():
                    out[(idx, a)] = v
        return out

    def to_form(self) -> TensorField:
        """Read the increasing-index components as a form (caller certifies antisymmetry)."""
        return TensorField.form(self.chart, self.degree,
                                {k: v for k, v in self.comps.items() if all(a < b for a, b in zip(k, k[1:]))})

    def is_zero_exact(self) -> bool:
        return not self.comps


def _as_cov(t) -> CovTensor:
    if isinstance(t, CovTensor):
        return t
    if isinstance(t, TensorField) and t.kind == FORM:
        return CovTensor.from_form(t)
    raise TypeError("expected a covariant tensor or a form")


@dataclass(frozen=True)
class GeneralizedSection:
    """Section X + alpha of the generalized tangent bundle."""

    vector: TensorField
    covector: TensorField

    def __post_init__(self):
        if not self.vector.chart.same(self.covector.chart):
            raise ChartMismatchError("vector and covector parts live on different charts")
        if (self.vector.kind, self.vector.degree) != (VECTOR, 1):
            raise KindError("vector part must be a vector field")
        if (self.covector.kind, self.covector.degree) != (FORM, 1):
            raise KindError("covector part must be a 1-form")

    @property
    def chart(self):
        return self.vector.chart

    @classmethod
    def make(cls, chart, vector=None, covector=None):
        return cls(vector if vector is not None else TensorField.multivector(chart, 1),
                   covector if covector is not None else TensorField.form(chart, 1))

    def __add__(self, other):
        return GeneralizedSection(self.vector + other.vector, self.covector + other.covector)

    def __sub__(self, other):
        return GeneralizedSection(self.vector - other.vector, self.covector - other.covector)

    def __neg__(self):
        return GeneralizedSection(-self.vector, -self.covector)

    def scale(self, f):
        return GeneralizedSection(self.vector.scale(f), self.covector.scale(f))

    def is_zero_exact(self):
        return self.vector.is_zero_exact() and self.covector.is_zero_exact()


# -- coordinate frames ------------------------------------------------------

def coord_vector(chart: ChartManifold, i: int) -> TensorField:
    return TensorField.multivector(chart, 1, {(i,): ONE})


def coord_covector(chart: ChartManifold, i: int) -> TensorField:
    return TensorField.form(chart, 1, {(i,): ONE})


def _need(t: TensorField, kind: str, degree: int | None = None, what: str = ""):
    if not isinstance(t, TensorField) or t.kind != kind or (degree is not None and t.degree != degree):
        want = kind if degree is None else f"{kind} of degree {degree}"
        got = t.describe() if isinstance(t, TensorField) else type(t).__name__
        raise KindError(f"{what or 'argument'} must be a {want}, got {got}")


def _need_form(t):
    _need(t, FORM)


def _same_chart(*ts):
    c = ts[0].chart
    for t in ts[1:]:
        if not c.same(t.chart):
            raise ChartMismatchError("tensor fields live on different charts")


# -- pointwise algebra ------------------------------------------------------

def wedge(a: TensorField, b: TensorField) -> TensorField:
    """Exterior product of two forms or two multivectors."""
    _same_chart(a, b)
    if a.kind != b.kind or a.kind == ENDO:
        raise KindError("wedge needs two forms or two multivectors")
    k = a.degree + b.degree
    out: dict = {}
    for ka, va in a.comps.items():
        for kb, vb in b.comps.items():
            s, sign = sort_sign(ka + kb)
            if s is None:
                continue
            v = va * vb
            out[s] = out.get(s, ZERO) + (v if sign > 0 else -v)
    return TensorField(a.chart, a.kind, k, out)


def interior_vf(X: TensorField, w: TensorField) -> TensorField:
    """(iota_X w)(Y1, ...) = w(X, Y1, ...)."""
    _need(X, VECTOR, 1, "X")
    _need(w, FORM, None, "w")
    _same_chart(X, w)
    if w.degree == 0:
        raise ValueError("cannot contract a 0-form")
    out: dict = {}
    for k, v in w.comps.items():
        for pos, i in enumerate(k):
            xi = X.comps.get((i,))
            if xi is None:
                continue
            rest = k[:pos] + k[pos + 1:]
            term = xi * v
            out[rest] = out.get(rest, ZERO) + (term if pos % 2 == 0 else -term)
    return TensorField.form(w.chart, w.degree - 1, out)


def interior_pair(X: TensorField, Y: TensorField, w: TensorField) -> TensorField:
    if w.kind == FORM and w.degree < 2:
        raise ValueError("need a form of degree at least 2")
    return interior_vf(Y, interior_vf(X, w))


def interior_form(a: TensorField, V: TensorField) -> TensorField:
    """Contract a 1-form into the first slot of a multivector."""
    _need(a, FORM, 1, "a")
    _need(V, VECTOR, None, "V")
    _same_chart(a, V)
    out: dict = {}
    for k, v in V.comps.items():
        for pos, i in enumerate(k):
            ai = a.comps.get((i,))
            if ai is None:
                continue
            rest = k[:pos] + k[pos + 1:]
            term = ai * v
            out[rest] = out.get(rest, ZERO) + (term if pos % 2 == 0 else -term)
    return TensorField.multivector(V.chart, V.degree - 1, out)


def pairing(a: TensorField, X: TensorField) -> NormalForm:
    """a(X) for a 1-form and a vector field."""
    _need(a, FORM, 1, "a")
    _need(X, VECTOR, 1, "X")
    total = ZERO
    for (i,), v in a.comps.items():
        x = X.comps.get((i,))
        if x is not None:
            total = total + v * x
    return total


def bivector_eval(P: TensorField, a: TensorField, b: TensorField) -> NormalForm:
    """P(a, b) = <b, sharp(P, a)>."""
    return pairing(b, sharp(P, a))


def form_eval(w: TensorField, *vs: TensorField) -> NormalForm:
    """w(X1, ..., Xk)."""
    out = w
    for X in vs:
        out = interior_vf(X, out)
    return out.value()


def sharp(P: TensorField, a: TensorField) -> TensorField:
    """Raise a 1-form with a bivector: (sharp a)^j = sum_i a_i P^{ij}."""
    _need(P, VECTOR, 2, "P")
    return interior_form(a, P)


def flat(B: TensorField, X: TensorField) -> TensorField:
    """Lower a vector field with a 2-form: flat(B, X) = iota_X B."""
    _need(B, FORM, 2, "B")
    return interior_vf(X, B)


def sharp_matrix(P: TensorField) -> TensorField:
    """P-sharp as an endomorphism-shaped matrix acting on covector components."""
    _need(P, VECTOR, 2, "P")
    n = P.chart.dim
    return TensorField.endo(P.chart, {(j, i): P[i, j] for i in range(n) for j in range(n)})


def sharp_flat(P: TensorField, B: TensorField) -> TensorField:
    """The (1,1)-tensor C = sharp(P) o flat(B)."""
    _need(P, VECTOR, 2, "P")
    _need(B, FORM, 2, "B")
    _same_chart(P, B)
    n = P.chart.dim
    out = {}
    for l in range(n):
        for j in range(n):
            v = ZERO
            for k in range(n):
                p = P[k, l]
                if p.is_zero_exact():
                    continue
                b = B[j, k]
                if not b.is_zero_exact():
                    v = v + p * b
            out[(l, j)] = v
    return TensorField.endo(P.chart, out)


def endo_apply(A: TensorField, X: TensorField) -> TensorField:
    _need(A, ENDO, None, "A")
    _need(X, VECTOR, 1, "X")
    _same_chart(A, X)
    out: dict = {}
    for (i, j), a in A.comps.items():
        x = X.comps.get((j,))
        if x is not None:
            out[(i,)] = out.get((i,), ZERO) + a * x
    return TensorField.multivector(A.chart, 1, out)


def endo_transpose_apply(A: TensorField, a: TensorField) -> TensorField:
    """(A^t a)(X) = a(AX)."""
    _need(A, ENDO, None, "A")
    _need(a, FORM, 1, "a")
    _same_chart(A, a)
    out: dict = {}
    for (i, j), v in A.comps.items():
        ai = a.comps.get((i,))
        if ai is not None:
            out[(j,)] = out.get((j,), ZERO) + ai * v
    return TensorField.form(A.chart, 1, out)


def endo_compose(A: TensorField, B: TensorField) -> TensorField:
    """Matrix product A o B."""
    _need(A, ENDO, None, "A")
    _need(B, ENDO, None, "B")
    _same_chart(A, B)
    out: dict = {}
    for (i, k), a in A.comps.items():
        for (k2, j), b in B.comps.items():
            if k == k2:
                out[(i, j)] = out.get((i, j), ZERO) + a * b
    return TensorField.endo(A.chart, out)


def endo_transpose(A: TensorField) -> TensorField:
    return TensorField.endo(A.chart, {(j, i): v for (i, j), v in A.comps.items()})


def form_left(B: TensorField, S: TensorField) -> CovTensor:
    """(X, Y) -> B(SX, Y)."""
    return form_both(B, S, None)


def form_both(B: TensorField, S: TensorField | None, T: TensorField | None) -> CovTensor:
    """(X, Y) -> B(SX, TY); ``None`` stands for the identity."""
    _need(B, FORM, 2, "B")
    n = B.chart.dim
    Sm = S.matrix() if S is not None else None
    Tm = T.matrix() if T is not None else None
    out = {}
    for i in range(n):
        for j in range(n):
            v = ZERO
            ks = range(n) if Sm is not None else (i,)
            ls = range(n) if Tm is not None else (j,)
            for k in ks:
                s = Sm[k][i] if Sm is not None else ONE
                if s.is_zero_exact():
                    continue
                for l in ls:
                    t = Tm[l][j] if Tm is not None else ONE
                    if t.is_zero_exact():
                        continue
                    b = B[k, l]
                    if not b.is_zero_exact():
                        v = v + s * t * b
            out[(i, j)] = v
    return CovTensor(B.chart, 2, out)


def is_antisymmetric_exact(T: CovTensor) -> bool:
    return not T.antisymmetry_defects()


def i_A(A: TensorField, w: TensorField) -> TensorField:
    """Degree-0 derivation: (iota_A w)(X1..Xk) = sum_m w(X1, .., A Xm, .., Xk)."""
    _need(A, ENDO, None, "A")
    _need(w, FORM, None, "w")
    _same_chart(A, w)
    out: dict = {}
    for k, v in w.comps.items():
        for pos, l in enumerate(k):
            for (l2, i), a in A.comps.items():
                if l2 != l:
                    continue
                idx = k[:pos] + (i,) + k[pos + 1:]
                s, sign = sort_sign(idx)
                if s is None:
                    continue
                term = a * v
                out[s] = out.get(s, ZERO) + (term if sign > 0 else -term)
    return TensorField.form(w.chart, w.degree, out)


# -- zero testing on whole tensors -------------------------------------------

def component_verdicts(t, policy: SamplingPolicy = DEFAULT_POLICY, nonvanishing=None):
    """Zero verdict for every stored component; returns list of (index, verdict)."""
    if isinstance(t, GeneralizedSection):
        return ([(("X",) + k, v) for k, v in component_verdicts(t.vector, policy, nonvanishing)]
                + [(("a",) + k, v) for k, v in component_verdicts(t.covector, policy, nonvanishing)])
    nv = t.chart.nonvanishing if nonvanishing is None else nonvanishing
    coords = list(t.chart.coords)
    return [(k, is_zero(v, policy, nv, coords)) for k, v in sorted(t.comps.items())]


def all_zero(t, policy: SamplingPolicy = DEFAULT_POLICY, nonvanishing=None) -> bool:
    return all(v.ok for _, v in component_verdicts(t, policy, nonvanishing))
