"""Structure-level checkers and the generalized tangent bundle layer."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .calculus import (concomitant, d_function, ext_d, hcal, lie_derivative,
                       nijenhuis_apply, schouten_self, vf_bracket)
from .expr import NormalForm, SamplingPolicy, is_zero
from .expr.zero import DEFAULT_POLICY, NonZero, ZeroExact, ZeroNumeric
from .tensor import (ENDO, FORM, VECTOR, ChartManifold, CovTensor, GeneralizedSection,
                     KindError, TensorField, coord_covector, coord_vector, endo_apply,
                     endo_compose, endo_transpose, endo_transpose_apply, form_left, i_A,
                     interior_pair, interior_vf, pairing, sharp, sharp_flat, sharp_matrix)


# -- reports ---------------------------------------------------------------

@dataclass
class ReportItem:
    label: str
    anchor: str
    ok: bool
    verdict: object = None  # ZeroVerdict, or None for boolean items
    component: tuple | None = None
    note: str = ""

    @property
    def status(self) -> str:
        if self.verdict is None:
            return "pass" if self.ok else "fail"
        return type(self.verdict).__name__

    def as_dict(self) -> dict:
        d = {"label": self.label, "anchor": self.anchor, "ok": self.ok, "status": self.status}
        if self.verdict is not None:
            d.update(self.verdict.as_dict())
        if self.component is not None:
            d["component"] = [c + 1 if isinstance(c, int) else c for c in self.component]
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class VerificationReport:
    title: str
    items: list = field(default_factory=list)
    policy: SamplingPolicy = DEFAULT_POLICY

    @property
    def ok(self) -> bool:
        return all(it.ok for it in self.items)

    def item(self, label: str) -> ReportItem:
        for it in self.items:
            if it.label == label:
                return it
        raise KeyError(label)

    def failed(self) -> list:
        return [it for it in self.items if not it.ok]

    def extend(self, other: "VerificationReport", prefix: str = ""):
        for it in other.items:
            self.items.append(ReportItem(prefix + it.label, it.anchor, it.ok, it.verdict, it.component, it.note))
        return self

    def as_dict(self) -> dict:
        return {"title": self.title, "ok": self.ok, "seed": self.policy.seed,
                "policy": self.policy.as_dict(), "items": [it.as_dict() for it in self.items]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def text(self) -> str:
        lines = [self.title]
        width = max((len(it.label) for it in self.items), default=0)
        for it in self.items:
            mark = "PASS" if it.ok else "FAIL"
            line = f"  [{mark}] {it.label.ljust(width)}  {it.anchor}: {it.status}"
            v = it.verdict
            if isinstance(v, ZeroNumeric):
                line += f" (max residual {v.max_residual:.3g} over {v.points} points)"
            if isinstance(v, NonZero):
                comp = "" if it.component is None else f" component {_fmt_comp(it.component)}"
                pt = ", ".join(f"{k}={val}" for k, val in v.witness.items())
                line += f"{comp} residual {v.residual:.6g} at ({pt})"
            if it.note:
                line += f" [{it.note}]"
            lines.append(line)
        lines.append(f"  overall: {'PASS' if self.ok else 'FAIL'} (seed {self.policy.seed}, "
                     f"{self.policy.points} points, tol {self.policy.tol:g})")
        return "\n".join(lines)

    def __str__(self):
        return self.text()


def _fmt_comp(comp) -> str:
    return "(" + ",".join(str(c + 1) if isinstance(c, int) else str(c) for c in comp) + ")"


class Checker:
    """Zero-tests families of components under one policy and chart."""

    def __init__(self, chart: ChartManifold, policy: SamplingPolicy = DEFAULT_POLICY, nonvanishing=None):
        self.chart = chart
        self.policy = policy
        self.nonvanishing = tuple(chart.nonvanishing if nonvanishing is None else nonvanishing)
        self.coords = list(chart.coords)

    def verdict(self, f: NormalForm):
        return is_zero(f, self.policy, self.nonvanishing, self.coords)

    def item(self, label: str, anchor: str, comps: Iterable) -> ReportItem:
        """Aggregate component verdicts; stops at the first nonzero one."""
        worst = 0.0
        points = 0
        numeric = False
        for key, value in comps:
            v = self.verdict(value)
            if isinstance(v, NonZero):
                return ReportItem(label, anchor, False, v, tuple(key))
            if isinstance(v, ZeroNumeric):
                numeric = True
                worst = max(worst, v.max_residual)
                points = v.points
        verdict = ZeroNumeric(worst, points) if numeric else ZeroExact()
        return ReportItem(label, anchor, True, verdict)


def tensor_comps(t) -> list:
    """(key, value) pairs of any tensor-like result, deterministically ordered."""
    if isinstance(t, GeneralizedSection):
        return ([(("X",) + k, v) for k, v in sorted(t.vector.comps.items())]
                + [(("a",) + k, v) for k, v in sorted(t.covector.comps.items())])
    if isinstance(t, (TensorField, CovTensor)):
        return sorted(t.comps.items())
    if isinstance(t, dict):
        return sorted(t.items())
    raise TypeError(f"cannot enumerate components of {type(t).__name__}")


# -- structures --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PqNbStructure:
    chart: ChartManifold
    P: TensorField
    A: TensorField
    phi: TensorField
    H: TensorField

    def __post_init__(self):
        for name, t, kind, deg in (("P", self.P, VECTOR, 2), ("A", self.A, ENDO, 1),
                                   ("phi", self.phi, FORM, 3), ("H", self.H, FORM, 3)):
            if not isinstance(t, TensorField) or t.kind != kind or t.degree != deg:
                raise KindError(f"{name} has the wrong tensor type")
            if not t.chart.same(self.chart):
                raise ValueError(f"{name} lives on a different chart")

    @classmethod
    def make(cls, chart, P=None, A=None, phi=None, H=None):
        return cls(chart,
                   P if P is not None else TensorField.multivector(chart, 2),
                   A if A is not None else TensorField.endo(chart),
                   phi if phi is not None else TensorField.form(chart, 3),
                   H if H is not None else TensorField.form(chart, 3))

    def parts(self) -> dict:
        return {"P": self.P, "A": self.A, "phi": self.phi, "H": self.H}

    def difference(self, other: "PqNbStructure") -> list:
        """Components of self - other, keyed by (tensor name, index)."""
        out = []
        for name, t in self.parts().items():
            d = t - other.parts()[name]
            out += [((name,) + k, v) for k, v in sorted(d.comps.items())]
        return out

    def equals_exact(self, other: "PqNbStructure") -> bool:
        return not self.difference(other)


def check_poisson(P: TensorField, policy: SamplingPolicy = DEFAULT_POLICY) -> VerificationReport:
    ck = Checker(P.chart, policy)
    rep = VerificationReport("Poisson bivector", policy=policy)
    rep.items.append(ck.item("poisson", "[P,P] = 0", tensor_comps(schouten_self(P))))
    return rep


def compat_matrix_residual(P: TensorField, A: TensorField) -> TensorField:
    """A o P# - P# o A^t as a matrix."""
    M = sharp_matrix(P)
    return endo_compose(A, M) - endo_compose(M, endo_transpose(A))


def concomitant_residuals(P, A, H) -> dict:
    chart = P.chart
    out = {}
    for i, j in combinations(range(chart.dim), 2):
        a, b = coord_covector(chart, i), coord_covector(chart, j)
        r = concomitant(P, A, a, b)
        if not H.is_zero_exact():
            r = r + interior_pair(sharp(P, a), sharp(P, b), H)
        for (k,), v in r.comps.items():
            out[(i, j, k)] = v
    return out


def torsion_residuals(P, A, phi, H) -> dict:
    chart = P.chart
    out = {}
    for i, j in combinations(range(chart.dim), 2):
        X, Y = coord_vector(chart, i), coord_vector(chart, j)
        rhs = interior_pair(X, Y, phi)
        if not H.is_zero_exact():
            rhs = rhs + interior_pair(endo_apply(A, X), Y, H) + interior_pair(X, endo_apply(A, Y), H)
        r = nijenhuis_apply(A, X, Y) - sharp(P, rhs)
        for (k,), v in r.comps.items():
            out[(k, i, j)] = v
    return out


def dA_phi_residual(A, phi, H) -> TensorField:
    from .calculus import d_A

    r = d_A(A, phi)
    if not H.is_zero_exact():
        r = r - ext_d(hcal(H, A))
    return r


def check_pqnb(S: PqNbStructure, policy: SamplingPolicy = DEFAULT_POLICY,
               title: str = "Poisson quasi-Nijenhuis structure with background") -> VerificationReport:
    ck = Checker(S.chart, policy)
    P, A, phi, H = S.P, S.A, S.phi, S.H
    rep = VerificationReport(title, policy=policy)
    rep.items.append(ck.item("closed_phi", "d phi = 0", tensor_comps(ext_d(phi))))
    rep.items.append(ck.item("closed_H", "d H = 0", tensor_comps(ext_d(H))))
    rep.items.append(ck.item("poisson", "[P,P] = 0", tensor_comps(schouten_self(P))))
    rep.items.append(ck.item("A_P_compat", "A P# = P# A^t", tensor_comps(compat_matrix_residual(P, A))))
    rep.items.append(ck.item("concomitant", "C_{P,A}(a,b) = -i_{P#a ^ P#b} H",
                             tensor_comps(concomitant_residuals(P, A, H))))
    rep.items.append(ck.item("torsion", "N_A(X,Y) = P#(i_{X^Y} phi + i_{AX^Y} H + i_{X^AY} H)",
                             tensor_comps(torsion_residuals(P, A, phi, H))))
    rep.items.append(ck.item("dA_phi", "d_A phi = d(cyclic H(A.,A.,.))",
                             tensor_comps(dA_phi_residual(A, phi, H))))
    return rep


def check_pqn(P, A, phi, policy: SamplingPolicy = DEFAULT_POLICY) -> VerificationReport:
    S = PqNbStructure.make(P.chart, P, A, phi)
    return check_pqnb(S, policy, "Poisson quasi-Nijenhuis structure")


def check_pn(P, A, policy: SamplingPolicy = DEFAULT_POLICY) -> VerificationReport:
    S = PqNbStructure.make(P.chart, P, A)
    return check_pqnb(S, policy, "Poisson-Nijenhuis structure")


# -- generalized tangent bundle ------------------------------------------------

def courant_bracket(mu: GeneralizedSection, nu: GeneralizedSection) -> GeneralizedSection:
    """[X+a, Y+b] = [X,Y] + L_X b - L_Y a + 1/2 d(a(Y) - b(X))."""
    X, a = mu.vector, mu.covector
    Y, b = nu.vector, nu.covector
    half = NormalForm.const(1) / 2
    cov = (lie_derivative(X, b) - lie_derivative(Y, a)
           + d_function(mu.chart, (pairing(a, Y) - pairing(b, X)) * half))
    return GeneralizedSection(vf_bracket(X, Y), cov)


def courant_bracket_H(mu: GeneralizedSection, nu: GeneralizedSection, H: TensorField) -> GeneralizedSection:
    br = courant_bracket(mu, nu)
    if H.is_zero_exact():
        return br
    return GeneralizedSection(br.vector, br.covector - interior_pair(mu.vector, nu.vector, H))


def bfield_map(B: TensorField, mu: GeneralizedSection) -> GeneralizedSection:
    """X + a -> X + a + i_X B."""
    return GeneralizedSection(mu.vector, mu.covector + interior_vf(mu.vector, B))


def courant_compat_residual(B, H, mu, nu) -> GeneralizedSection:
    """B-field image of [mu,nu]_H minus the (H + dB)-bracket of the images."""
    lhs = bfield_map(B, courant_bracket_H(mu, nu, H))
    rhs = courant_bracket_H(bfield_map(B, mu), bfield_map(B, nu), H + ext_d(B))
    return lhs - rhs


@dataclass(frozen=True, eq=False)
class GcStructure:
    """Block map (X + a) -> (AX + P#a) + (i_X sigma - A^t a) with background H."""

    chart: ChartManifold
    A: TensorField
    P: TensorField
    sigma: TensorField
    H: TensorField

    @classmethod
    def make(cls, chart, A=None, P=None, sigma=None, H=None):
        return cls(chart,
                   A if A is not None else TensorField.endo(chart),
                   P if P is not None else TensorField.multivector(chart, 2),
                   sigma if sigma is not None else TensorField.form(chart, 2),
                   H if H is not None else TensorField.form(chart, 3))

    def apply(self, mu: GeneralizedSection) -> GeneralizedSection:
        X, a = mu.vector, mu.covector
        return GeneralizedSection(endo_apply(self.A, X) + sharp(self.P, a),
                                  interior_vf(X, self.sigma) - endo_transpose_apply(self.A, a))

    def pqnb(self) -> PqNbStructure:
        return PqNbStructure(self.chart, self.P, self.A, ext_d(self.sigma), self.H)


def coordinate_sections(chart) -> list:
    out = []
    for i in range(chart.dim):
        out.append((f"d/d{chart.coords[i]}", GeneralizedSection.make(chart, vector=coord_vector(chart, i))))
    for i in range(chart.dim):
        out.append((f"d{chart.coords[i]}", GeneralizedSection.make(chart, covector=coord_covector(chart, i))))
    return out


def sigma_A(J: GcStructure) -> CovTensor:
    return form_left(J.sigma, J.A)


def check_gc_background(J: GcStructure, policy: SamplingPolicy = DEFAULT_POLICY) -> VerificationReport:
    """Tensorial characterization, conditions (1)-(5)."""
    ck = Checker(J.chart, policy)
    P, A, sigma, H = J.P, J.A, J.sigma, J.H
    dsigma = ext_d(sigma)
    rep = VerificationReport("generalized complex structure with background (tensorial)", policy=policy)
    rep.items.append(ck.item("closed_H", "d H = 0", tensor_comps(ext_d(H))))
    rep.items.append(ck.item("(1)", "[P,P] = 0", tensor_comps(schouten_self(P))))
    rep.items.append(ck.item("(2) A_P_compat", "A P# = P# A^t", tensor_comps(compat_matrix_residual(P, A))))
    rep.items.append(ck.item("(2) concomitant", "C_{P,A}(a,b) = -i_{P#a ^ P#b} H",
                             tensor_comps(concomitant_residuals(P, A, H))))
    rep.items.append(ck.item("(3)", "N_A(X,Y) = P#(i_{X^Y} d sigma + i_{AX^Y} H + i_{X^AY} H)",
                             tensor_comps(torsion_residuals(P, A, dsigma, H))))
    sA = sigma_A(J)
    defects = sA.antisymmetry_defects()
    anti = ck.item("(4) sigma_A antisymmetric", "sigma(AX,Y) = -sigma(AY,X)",
                   [(k[0], v) for k, v in sorted(defects.items())])
    rep.items.append(anti)
    if anti.ok:
        # numerically antisymmetric but possibly not exactly: symmetrize before d
        sA_form = TensorField.from_unordered(J.chart, FORM, 2, {
            k: v * (NormalForm.const(1) / 2) for k, v in sA.comps.items()})
        resid = ext_d(sA_form) + H - i_A(A, dsigma)
        if not H.is_zero_exact():
            resid = resid - hcal(H, A)
        rep.items.append(ck.item("(4) background relation", "d sigma_A + H - i_A d sigma - cyclic H(A.,A.,.) = 0",
                                 tensor_comps(resid)))
    else:
        rep.items.append(ReportItem("(4) background relation", "d sigma_A + H - i_A d sigma - cyclic H(A.,A.,.) = 0",
                                    False, None, None, "skipped: sigma_A not antisymmetric"))
    five = endo_compose(A, A) + TensorField.identity(J.chart) + endo_compose(sharp_matrix(P), _flat_matrix(sigma))
    rep.items.append(ck.item("(5)", "A^2 = -Id - P# sigma_flat", tensor_comps(five)))
    return rep


def _flat_matrix(sigma: TensorField) -> TensorField:
    """sigma_flat as a matrix: (i_X sigma)_j = sum_i X^i sigma_{ij}, entry (j, i)."""
    n = sigma.chart.dim
    return TensorField.endo(sigma.chart, {(j, i): sigma[i, j] for i in range(n) for j in range(n)})


def check_gc_integrability_direct(J: GcStructure, policy: SamplingPolicy = DEFAULT_POLICY,
                                  background_sign: int = 1) -> VerificationReport:
    """J^2 = -Id and the twisted-Courant integrability condition on coordinate sections.

    ``background_sign=-1`` twists the bracket by -H instead of H.  With a
    non-closed gauge form the tensorial characterization matches the direct
    condition only under that opposite sign; see the convention test.
    """
    if background_sign not in (1, -1):
        raise ValueError("background_sign must be 1 or -1")
    ck = Checker(J.chart, policy)
    H = J.H if background_sign == 1 else -J.H
    secs = coordinate_sections(J.chart)
    rep = VerificationReport("generalized complex structure with background (direct)", policy=policy)
    rep.items.append(ck.item("closed_H", "d H = 0", tensor_comps(ext_d(H))))
    sq = []
    for name, mu in secs:
        r = J.apply(J.apply(mu)) + mu
        sq += [((name,) + k, v) for k, v in tensor_comps(r)]
    rep.items.append(ck.item("J_squared", "J^2 = -Id", sq))
    integ = []
    images = [(name, mu, J.apply(mu)) for name, mu in secs]
    for (n1, mu, Jmu), (n2, nu, Jnu) in combinations(images, 2):
        r = (courant_bracket_H(Jmu, Jnu, H)
             - J.apply(courant_bracket_H(Jmu, nu, H))
             - J.apply(courant_bracket_H(mu, Jnu, H))
             - courant_bracket_H(mu, nu, H))
        integ += [((n1, n2) + k, v) for k, v in tensor_comps(r)]
    rep.items.append(ck.item("integrability", "[Jm,Jn]_H - J[Jm,n]_H - J[m,Jn]_H - [m,n]_H = 0", integ))
    return rep


@dataclass
class SigmaShiftResult:
    ok: bool
    report: VerificationReport

    def __bool__(self):
        return self.ok


def check_sigma_shift(J: GcStructure, omega: TensorField,
                      policy: SamplingPolicy = DEFAULT_POLICY) -> SigmaShiftResult:
    """Whether (A, P, sigma + omega) is again gc with the same background."""
    ck = Checker(J.chart, policy)
    closed = ck.item("closed_omega", "d omega = 0", tensor_comps(ext_d(omega)))
    if not closed.ok:
        raise ValueError("omega must be closed")
    rep = VerificationReport("sigma shift", policy=policy)
    wA = form_left(omega, J.A)
    anti = ck.item("omega_A antisymmetric", "omega(AX,Y) = -omega(AY,X)",
                   [(k[0], v) for k, v in sorted(wA.antisymmetry_defects().items())])
    rep.items.append(anti)
    if anti.ok:
        wA_form = TensorField.from_unordered(J.chart, FORM, 2, {
            k: v * (NormalForm.const(1) / 2) for k, v in wA.comps.items()})
        rep.items.append(ck.item("omega_A closed", "d omega_A = 0", tensor_comps(ext_d(wA_form))))
    else:
        rep.items.append(ReportItem("omega_A closed", "d omega_A = 0", False, None, None,
                                    "skipped: omega_A not antisymmetric"))
    rep.items.append(ck.item("P_omega", "P# omega_flat = 0", tensor_comps(sharp_flat(J.P, omega))))
    return SigmaShiftResult(rep.ok, rep)
