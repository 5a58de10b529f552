"""Reduction in an adapted chart.

The chart of M splits into blocks ``q`` (quotient coordinates), ``s``
(directions collapsed by the projection) and ``c`` (constraint
directions).  The submanifold is N = {c = c0}, the distinguished subbundle
along N is E = span(d/ds, d/dc), so E meets TN in span(d/ds) and the
annihilator of E is span(dq).  The projection sends (q, s) to q.

All hypotheses are checked through pointwise surrogates on coordinate
frames restricted to N.  The surrogate for the bracket condition on
E-basic functions (label ``(i)``) is sufficient, not equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .calculus import concomitant, ext_d, hcal
from .expr import ZERO, NormalForm, SamplingPolicy, nf
from .expr.zero import DEFAULT_POLICY
from .gauge import gauge_transform
from .structures import (Checker, GcStructure, PqNbStructure, VerificationReport, check_gc_background,
                         sigma_A)
from .tensor import (ENDO, ChartManifold, TensorField, bivector_eval, coord_covector, i_A, sharp)


class ReductionError(ValueError):
    """Hypotheses failed, or a projected component kept an s-dependence."""

    def __init__(self, message: str, report: VerificationReport | None = None):
        super().__init__(message)
        self.report = report

    @property
    def labels(self) -> list:
        return [it.label for it in self.report.failed()] if self.report else []


@dataclass(frozen=True)
class AdaptedReductionSetup:
    chart: ChartManifold
    q: tuple
    s: tuple = ()
    c: tuple = ()
    c0: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(self.q))
        object.__setattr__(self, "s", tuple(self.s))
        object.__setattr__(self, "c", tuple(self.c))
        c0 = tuple(Fraction(v) for v in self.c0) if self.c0 else tuple(Fraction(0) for _ in self.c)
        object.__setattr__(self, "c0", c0)
        names = self.q + self.s + self.c
        if sorted(names) != sorted(self.chart.coords) or len(set(names)) != len(names):
            raise ValueError("q, s and c must partition the chart coordinates")
        if not self.q:
            raise ValueError("the quotient block q must be nonempty")
        if len(self.c0) != len(self.c):
            raise ValueError("need one value in c0 per constraint coordinate")

    # index blocks in the chart's ordering
    @property
    def qi(self):
        return [self.chart.index(x) for x in self.q]

    @property
    def si(self):
        return [self.chart.index(x) for x in self.s]

    @property
    def ci(self):
        return [self.chart.index(x) for x in self.c]

    @property
    def tangent(self):
        """Indices spanning TN (q and s)."""
        return sorted(self.qi + self.si)

    @property
    def transverse(self):
        """Indices spanning E (s and c)."""
        return sorted(self.si + self.ci)

    def on_N(self) -> dict:
        return {x: NormalForm.const(v) for x, v in zip(self.c, self.c0)}

    def on_section(self) -> dict:
        m = self.on_N()
        m.update({x: NormalForm.const(0) for x in self.s})
        return m

    def restrict(self, f) -> NormalForm:
        return nf(f).subs(self.on_N())

    def quotient_chart(self) -> ChartManifold:
        keep = []
        for g in self.chart.nonvanishing:
            r = g.subs(self.on_section())
            if r.coords() <= set(self.q) and not r.is_constant():
                keep.append(r)
        return ChartManifold(self.q, tuple(keep))

    def n_checker(self, policy: SamplingPolicy) -> Checker:
        """Zero tests on N: nonvanishing declarations restricted to c = c0."""
        nv = [self.restrict(g) for g in self.chart.nonvanishing]
        nv = [g for g in nv if not g.is_constant()]
        return Checker(self.chart, policy, nv)


def _require(setup: AdaptedReductionSetup, S):
    if not setup.chart.same(S.chart):
        raise ValueError("structure and reduction setup use different charts")


# -- hypotheses -----------------------------------------------------------------

def _form_E_components(setup, w: TensorField):
    """Components w(e, t1, ..) with e in E and t's in TN (checked on N)."""
    out = []
    tan = setup.tangent
    for e in setup.transverse:
        for rest in combinations(tan, w.degree - 1):
            if e in rest:
                continue
            v = w[(e,) + rest]
            if not v.is_zero_exact():
                out.append(((e,) + rest, setup.restrict(v)))
    return out


def check_reduction_hypotheses(setup: AdaptedReductionSetup, S: PqNbStructure,
                               policy: SamplingPolicy = DEFAULT_POLICY) -> VerificationReport:
    """Surrogates (i)-(iv) for reducibility, all restricted to N."""
    _require(setup, S)
    ck = setup.n_checker(policy)
    P, A = S.P, S.A
    q, s, c = setup.qi, setup.si, setup.ci
    rep = VerificationReport("reduction hypotheses", policy=policy)

    comps = []
    for i, j in combinations(q, 2):
        for a in s:
            comps.append(((a, i, j), setup.restrict(P[i, j].diff(setup.chart.coords[a]))))
    item = ck.item("(i)", "d/ds P^{qq} = 0 on N", comps)
    item.note = "sufficient surrogate"
    rep.items.append(item)

    comps = [((i, b), setup.restrict(P[i, b])) for i in q for b in c]
    rep.items.append(ck.item("(ii)", "P^{qc} = 0 on N", comps))

    comps = [((b, j), setup.restrict(A[b, j])) for b in c for j in q + s]
    rep.items.append(ck.item("(iii) A(TN) in TN", "A^c_q = A^c_s = 0 on N", comps))
    comps = [((i, j), setup.restrict(A[i, j])) for i in q for j in s + c]
    rep.items.append(ck.item("(iii) A(E) in E", "A^q_s = A^q_c = 0 on N", comps))
    comps = []
    for i in q:
        for j in q:
            for a in s:
                comps.append(((a, i, j), setup.restrict(A[i, j].diff(setup.chart.coords[a]))))
    rep.items.append(ck.item("(iii) projectable", "d/ds A^q_q = 0 on N", comps))

    comps = ([(("phi",) + k, v) for k, v in _form_E_components(setup, S.phi)]
             + [(("H",) + k, v) for k, v in _form_E_components(setup, S.H)])
    rep.items.append(ck.item("(iv)", "i_N^*(i_X phi) = i_N^*(i_X H) = 0 for X in E", comps))
    return rep


# -- projection ---------------------------------------------------------------------

def _project(setup, t: TensorField, ck: Checker, name: str, qchart: ChartManifold):
    """Pure-q components restricted to N, certified s-independent, read at s = 0."""
    q = setup.qi
    pos = {i: k for k, i in enumerate(q)}
    dep = []
    out = {}
    if t.kind == ENDO:
        keys = [(i, j) for i in q for j in q]
    else:
        keys = list(combinations(q, t.degree))
    for key in keys:
        v = t[key]
        if v.is_zero_exact():
            continue
        vN = setup.restrict(v)
        for a in setup.si:
            dep.append(((name,) + key + (a,), vN.diff(setup.chart.coords[a])))
        out[tuple(pos[i] for i in key)] = v.subs(setup.on_section())
    item = ck.item(f"s-independence of {name}", f"d/ds of projected {name} = 0 on N", dep)
    return TensorField(qchart, t.kind, t.degree, out), item


def project_structure(setup: AdaptedReductionSetup, S: PqNbStructure,
                      policy: SamplingPolicy = DEFAULT_POLICY):
    ck = setup.n_checker(policy)
    Q = setup.quotient_chart()
    parts = {}
    items = []
    for name, t in S.parts().items():
        parts[name], item = _project(setup, t, ck, name, Q)
        items.append(item)
    return PqNbStructure(Q, parts["P"], parts["A"], parts["phi"], parts["H"]), items


def reduce(setup: AdaptedReductionSetup, S: PqNbStructure,
           policy: SamplingPolicy = DEFAULT_POLICY) -> PqNbStructure:
    """Projected structure on the quotient chart (hypotheses enforced)."""
    rep = check_reduction_hypotheses(setup, S, policy)
    if not rep.ok:
        raise ReductionError("reduction hypotheses fail: " + ", ".join(it.label for it in rep.failed()), rep)
    out, items = project_structure(setup, S, policy)
    dep = VerificationReport("projection", items, policy)
    if not dep.ok:
        raise ReductionError("projected components depend on s", dep)
    return out


# -- pullback comparisons used by the reduction identity checks ------------------------

def pullback_difference(setup, w_M: TensorField, w_Q: TensorField) -> list:
    """i_N^* w_M - pi^* w_Q, as (index, value) pairs over increasing TN-tuples."""
    tan = setup.tangent
    pos = {i: k for k, i in enumerate(setup.qi)}
    out = []
    for key in combinations(tan, w_M.degree):
        v = setup.restrict(w_M[key])
        if all(i in pos for i in key):
            v = v - w_Q[tuple(pos[i] for i in key)]
        if not v.is_zero_exact():
            out.append((key, v))
    return out


def extension(setup, i: int, probe: bool = False, seed: int = 0) -> TensorField:
    """Canonical extension dq_i of the pullback of dq_i (vanishes on E).

    With ``probe`` a term (c - c0) * gamma is added; it vanishes on N, so the
    result is another admissible extension.
    """
    chart = setup.chart
    w = coord_covector(chart, setup.qi[i])
    if not probe or not setup.c:
        return w
    shift = ZERO
    for x, v in zip(setup.c, setup.c0):
        shift = shift + NormalForm.coord(x) - NormalForm.const(v)
    gamma = {}
    for k, idx in enumerate(range(chart.dim)):
        coef = NormalForm.const(1 + (seed + 3 * i + k) % 4)
        if (seed + i + k) % 2:
            coef = coef * NormalForm.coord(chart.coords[(k + i + 1) % chart.dim])
        gamma[(idx,)] = coef * shift
    return w + TensorField.form(chart, 1, gamma)


def reduction_identity_checks(setup: AdaptedReductionSetup, S: PqNbStructure, reduced: PqNbStructure,
                 policy: SamplingPolicy = DEFAULT_POLICY, probe: bool = True) -> VerificationReport:
    """Instance checks relating a structure and its reduction.

    * P on extensions of pulled-back coframes equals the reduced P
    * dpi o P#(extension) equals the reduced P# along N
    * concomitants correspond under pullback
    * i_N^*(i_A phi) = pi^*(i_A' phi') and the cyclic H-forms correspond
    * the first three are repeated with a second extension when ``probe``
    """
    ck = setup.n_checker(policy)
    Q = reduced.chart
    m = len(setup.q)
    P, A = S.P, S.A
    rep = VerificationReport("reduction identities", policy=policy)

    def pairing_items(probe_ext: bool, tag: str):
        exts = [extension(setup, i, probe_ext, seed=policy.seed) for i in range(m)]
        pair, shp, conc = [], [], []
        for i in range(m):
            Pi = sharp(P, exts[i])
            Pq = sharp(reduced.P, coord_covector(Q, i))
            for k, qk in enumerate(setup.qi):
                shp.append(((i, k), setup.restrict(Pi[qk]) - Pq[k]))
            for j in range(m):
                if i < j:
                    pair.append(((i, j), setup.restrict(_pair(P, exts[i], exts[j])) - reduced.P[i, j]))
                    cM = concomitant(P, A, exts[i], exts[j])
                    cQ = concomitant(reduced.P, reduced.A, coord_covector(Q, i), coord_covector(Q, j))
                    conc += [((i, j) + key, v) for key, v in pullback_difference(setup, cM, cQ)]
        rep.items.append(ck.item(f"P pairing{tag}", "P(ext l, ext h) on N = P'(l, h) o pi", pair))
        rep.items.append(ck.item(f"P sharp{tag}", "dpi P#(ext l) on N = P'#(l) o pi", shp))
        rep.items.append(ck.item(f"concomitant{tag}", "pi^* C_{P',A'} = i_N^* C_{P,A}(ext, ext)", conc))

    pairing_items(False, "")
    rep.items.append(ck.item("i_A phi", "i_N^*(i_A phi) = pi^*(i_A' phi')",
                             pullback_difference(setup, i_A(A, S.phi), i_A(reduced.A, reduced.phi))))
    rep.items.append(ck.item("cyclic H", "i_N^* Hcal = pi^* Hcal'",
                             pullback_difference(setup, hcal(S.H, A), hcal(reduced.H, reduced.A))))
    if probe:
        pairing_items(True, " (second extension)")
    return rep


def _pair(P, a, b):
    return bivector_eval(P, a, b)


# -- generalized complex reduction -------------------------------------------------

def check_gc_reduction_hypotheses(setup: AdaptedReductionSetup, J: GcStructure,
                                  policy: SamplingPolicy = DEFAULT_POLICY) -> VerificationReport:
    _require(setup, J)
    ck = setup.n_checker(policy)
    base = check_reduction_hypotheses(setup, J.pqnb(), policy)
    rep = VerificationReport("gc reduction hypotheses", policy=policy)
    rep.items += [it for it in base.items if it.label != "(iv)"]
    tan = setup.tangent
    comps = [((t, e), setup.restrict(J.sigma[t, e])) for t in tan for e in setup.transverse if t != e]
    rep.items.append(ck.item("(a)", "sigma_flat(TN) in E^0: sigma_{t,s} = sigma_{t,c} = 0 on N", comps))
    dsig = ext_d(J.sigma)
    comps = ([(("dsigma",) + k, v) for k, v in _form_E_components(setup, dsig)]
             + [(("H",) + k, v) for k, v in _form_E_components(setup, J.H)])
    rep.items.append(ck.item("(b)", "i_N^*(i_X dsigma) = i_N^*(i_X H) = 0 for X in E", comps))
    return rep


@dataclass
class GcReduction:
    reduced: GcStructure
    report: VerificationReport


def reduce_gc(setup: AdaptedReductionSetup, J: GcStructure,
              policy: SamplingPolicy = DEFAULT_POLICY) -> GcReduction:
    """Projected generalized complex structure on the quotient chart."""
    pre = check_gc_background(J, policy)
    if not pre.ok:
        raise ReductionError("input is not a generalized complex structure", pre)
    hyp = check_gc_reduction_hypotheses(setup, J, policy)
    if not hyp.ok:
        raise ReductionError("gc reduction hypotheses fail: " + ", ".join(it.label for it in hyp.failed()), hyp)
    ck = setup.n_checker(policy)
    Q = setup.quotient_chart()
    items = []
    parts = {}
    for name, t in (("A", J.A), ("P", J.P), ("sigma", J.sigma), ("H", J.H)):
        parts[name], item = _project(setup, t, ck, name, Q)
        items.append(item)
    dep = VerificationReport("projection", items, policy)
    if not dep.ok:
        raise ReductionError("projected components depend on s", dep)
    red = GcStructure(Q, parts["A"], parts["P"], parts["sigma"], parts["H"])
    # sigma_A pulls back to sigma'_A'
    sA = sigma_A(J)
    sAq = sigma_A(red)
    pos = {i: k for k, i in enumerate(setup.qi)}
    diffs = []
    for t1 in setup.tangent:
        for t2 in setup.tangent:
            v = setup.restrict(sA[(t1, t2)])
            if t1 in pos and t2 in pos:
                v = v - sAq[(pos[t1], pos[t2])]
            diffs.append(((t1, t2), v))
    rep = VerificationReport("gc reduction", policy=policy)
    rep.extend(hyp)
    rep.items.append(ck.item("sigma_A pullback", "i_N^* sigma_A = pi^* sigma'_A'", diffs))
    return GcReduction(red, rep)


# -- gauge and reduction commute ---------------------------------------------------

@dataclass
class CommuteResult:
    ok: bool
    report: VerificationReport
    gauge_then_reduce: PqNbStructure | None = None
    reduce_then_gauge: PqNbStructure | None = None


def check_gauge_projectable(setup: AdaptedReductionSetup, B: TensorField,
                            policy: SamplingPolicy = DEFAULT_POLICY) -> VerificationReport:
    ck = setup.n_checker(policy)
    rep = VerificationReport("gauge form projectability", policy=policy)
    comps = [((t, e), setup.restrict(B[t, e])) for t in setup.tangent for e in setup.transverse if t != e]
    rep.items.append(ck.item("(a)", "B_flat(TN) in E^0: B_{t,s} = B_{t,c} = 0 on N", comps))
    comps = []
    for i, j in combinations(setup.qi, 2):
        v = setup.restrict(B[i, j])
        for a in setup.si:
            comps.append(((i, j, a), v.diff(setup.chart.coords[a])))
    rep.items.append(ck.item("(b)", "pure-q components of B are s-independent on N", comps))
    return rep


def project_form(setup, B: TensorField) -> TensorField:
    Q = setup.quotient_chart()
    pos = {i: k for k, i in enumerate(setup.qi)}
    out = {}
    for key in combinations(setup.qi, B.degree):
        v = B[key]
        if not v.is_zero_exact():
            out[tuple(pos[i] for i in key)] = v.subs(setup.on_section())
    return TensorField.form(Q, B.degree, out)


def gauge_reduce_commute(setup: AdaptedReductionSetup, S: PqNbStructure, B: TensorField,
                         policy: SamplingPolicy = DEFAULT_POLICY, trust: bool = True) -> CommuteResult:
    """Compare gauge-then-reduce with reduce-then-gauge."""
    hyp = check_reduction_hypotheses(setup, S, policy)
    proj = check_gauge_projectable(setup, B, policy)
    rep = VerificationReport("gauge and reduction commute", policy=policy)
    rep.extend(hyp)
    rep.extend(proj, "gauge ")
    if not rep.ok:
        return CommuteResult(False, rep)
    top = gauge_transform(B, S, trust=trust, policy=policy)
    try:
        left = reduce(setup, top, policy)
    except ReductionError as err:
        rep.extend(err.report, "gauged ")
        return CommuteResult(False, rep)
    right = gauge_transform(project_form(setup, B), reduce(setup, S, policy), trust=trust, policy=policy)
    ck = Checker(left.chart, policy)
    rep.items.append(ck.item("diagram", "reduce(gauge(S)) = gauge'(reduce(S))", left.difference(right)))
    return CommuteResult(rep.ok, rep, left, right)
