"""Named example structures and seeded random instance generators."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .calculus import ext_d
from .expr import NormalForm, parse_expr
from .gauge import gauge_gc, gauge_of_poisson, gauge_transform
from .reduction import AdaptedReductionSetup
from .structures import GcStructure, PqNbStructure
from .tensor import ChartManifold, TensorField, endo_compose

R3 = ("x1", "x2", "x3")
R4 = ("x1", "x2", "x3", "x4")


def E(text: str, coords, names=None) -> NormalForm:
    return parse_expr(text, coords, names).normal()


# -- worked examples ------------------------------------------------------------

def first_example(f: str = "1+x1^2", g: str = "x3", phi_scale: Fraction = Fraction(1)) -> PqNbStructure:
    """P = f d1^d2, A = g Id, H = -(1/f) dg/dx3 dx1^dx2^dx3, phi = -2 g H.

    ``g`` may depend on x3 only and ``f`` must not vanish.
    """
    fe, ge = E(f, R3), E(g, R3)
    chart = ChartManifold(R3, (fe,))
    P = TensorField.multivector(chart, 2, {(0, 1): fe})
    A = TensorField.identity(chart, ge)
    H = TensorField.form(chart, 3, {(0, 1, 2): -ge.diff("x3") / fe})
    phi = H.scale(-2 * ge * phi_scale)
    return PqNbStructure(chart, P, A, phi, H)


def first_example_gauge_form(chart: ChartManifold) -> TensorField:
    return TensorField.form(chart, 2, {(1, 2): 1})


def pn_example() -> PqNbStructure:
    """P = d1^d2, A = e^{x3}(Id + x2 d2 (x) dx3) on R^3."""
    chart = ChartManifold(R3)
    e3 = E("exp(x3)", R3)
    P = TensorField.multivector(chart, 2, {(0, 1): 1})
    A = TensorField.endo(chart, {(0, 0): e3, (1, 1): e3, (2, 2): e3, (1, 2): E("x2*exp(x3)", R3)})
    return PqNbStructure.make(chart, P, A)


def pn_gauge_form(chart: ChartManifold) -> TensorField:
    return TensorField.form(chart, 2, {(1, 2): E("exp(x2)", R3)})


# -- random building blocks ------------------------------------------------------

def random_poly(rng: random.Random, coords, degree: int = 2, terms: int = 3, coeff: int = 3) -> NormalForm:
    """Sparse polynomial with small integer coefficients and total degree <= degree."""
    out = NormalForm.const(0)
    for _ in range(rng.randint(1, terms)):
        c = rng.randint(-coeff, coeff) or 1
        mono = NormalForm.const(c)
        for _ in range(rng.randint(0, degree)):
            mono = mono * NormalForm.coord(rng.choice(coords))
        out = out + mono
    return out


def random_form(rng: random.Random, chart: ChartManifold, degree: int, poly_degree: int = 2,
                density: float = 0.6, coords=None) -> TensorField:
    coords = list(coords or chart.coords)
    comps = {}
    for idx in combinations(range(chart.dim), degree):
        if rng.random() < density:
            comps[idx] = random_poly(rng, coords, poly_degree)
    return TensorField.form(chart, degree, comps)


def closed_form(rng: random.Random, chart: ChartManifold, poly_degree: int = 2) -> TensorField:
    """Exact 2-form d(a) for a random polynomial 1-form a."""
    return ext_d(random_form(rng, chart, 1, poly_degree))


def random_vector(rng, chart, poly_degree: int = 2) -> TensorField:
    return TensorField.multivector(chart, 1, {(i,): random_poly(rng, list(chart.coords), poly_degree)
                                              for i in range(chart.dim) if rng.random() < 0.8})


def random_endo(rng, chart, poly_degree: int = 1, density: float = 0.5) -> TensorField:
    return TensorField.endo(chart, {(i, j): random_poly(rng, list(chart.coords), poly_degree)
                                    for i in range(chart.dim) for j in range(chart.dim)
                                    if rng.random() < density})


def random_bivector(rng, chart, poly_degree: int = 1, density: float = 0.5) -> TensorField:
    return TensorField.multivector(chart, 2, {k: random_poly(rng, list(chart.coords), poly_degree)
                                              for k in combinations(range(chart.dim), 2)
                                              if rng.random() < density})


# -- base Poisson bivectors on R^4 -------------------------------------------------

BASE_KINDS = ("symplectic", "x3_coefficient", "degenerate")


def base_poisson(kind: str, rng: random.Random | None = None) -> TensorField:
    chart = ChartManifold(R4)
    if kind == "symplectic":
        return TensorField.multivector(chart, 2, {(0, 1): 1, (2, 3): 1})
    if kind == "x3_coefficient":
        rng = rng or random.Random(0)
        f = random_poly(rng, ["x3"], 2)
        if f.is_zero_exact():
            f = NormalForm.coord("x3")
        return TensorField.multivector(chart, 2, {(0, 1): f})
    if kind == "degenerate":
        return TensorField.multivector(chart, 2, {(0, 1): 1})
    raise ValueError(f"unknown base bivector {kind!r}")


def poisson_and_form(seed: int):
    """Base Poisson bivector on R^4 (cycling through the kinds) with a random 2-form."""
    rng = random.Random(seed)
    P = base_poisson(BASE_KINDS[seed % 3], rng)
    B = random_form(rng, P.chart, 2)
    return P, B


def form_built_instance(seed: int) -> PqNbStructure:
    P, B = poisson_and_form(seed)
    return gauge_of_poisson(P, B, trust=True)


def closure_instance(seed: int):
    """A structure built from a 2-form plus a second random gauge form."""
    S = form_built_instance(seed)
    rng = random.Random(10_000 + seed)
    return S, random_form(rng, S.chart, 2)


# -- generalized complex corpus ------------------------------------------------------

def symplectic_gc(dim: int = 2) -> GcStructure:
    coords = tuple(f"x{i + 1}" for i in range(dim))
    chart = ChartManifold(coords)
    pairs = [(2 * k, 2 * k + 1) for k in range(dim // 2)]
    P = TensorField.multivector(chart, 2, {p: 1 for p in pairs})
    sigma = TensorField.form(chart, 2, {p: 1 for p in pairs})
    return GcStructure.make(chart, P=P, sigma=sigma)


def standard_complex(chart: ChartManifold, blocks=None) -> TensorField:
    """J0 on consecutive coordinate pairs: d1 -> d2, d2 -> -d1."""
    blocks = blocks or [(2 * k, 2 * k + 1) for k in range(chart.dim // 2)]
    comps = {}
    for a, b in blocks:
        comps[(b, a)] = 1
        comps[(a, b)] = -1
    return TensorField.endo(chart, comps)


def complex_gc(dim: int = 2) -> GcStructure:
    coords = tuple(f"x{i + 1}" for i in range(dim))
    chart = ChartManifold(coords)
    return GcStructure.make(chart, A=standard_complex(chart))


def gc_corpus(count: int = 50, seed: int = 0) -> list:
    """(name, GcStructure) pairs mixing genuine structures and violations."""
    rng = random.Random(seed)
    out = []
    k = 0
    while len(out) < count:
        kind = k % 10
        k += 1
        dim = 2 if rng.random() < 0.5 else 4
        if kind == 0:
            out.append(("symplectic", symplectic_gc(dim)))
        elif kind == 1:
            out.append(("complex", complex_gc(dim)))
        elif kind in (2, 3):
            J = symplectic_gc(dim)
            B = closed_form(rng, J.chart)
            out.append(("gauged symplectic", gauge_gc(B, J, trust=True)))
        elif kind == 4:
            J = complex_gc(4)
            out.append(("non-integrable almost complex", _twisted_complex(J, rng)))
        elif kind == 5:
            J = symplectic_gc(dim)
            out.append(("wrong-sign symplectic", GcStructure(J.chart, J.A, J.P, -J.sigma, J.H)))
        elif kind == 6:
            J = symplectic_gc(dim)
            B = closed_form(rng, J.chart)
            G = gauge_gc(B, J, trust=True)
            out.append(("gauged symplectic, sigma not shifted",
                        GcStructure(G.chart, G.A, G.P, J.sigma, G.H)))
        elif kind == 7:
            J = complex_gc(dim)
            out.append(("complex plus bivector",
                        GcStructure(J.chart, J.A, TensorField.multivector(J.chart, 2, {(0, 1): 1}),
                                    J.sigma, J.H)))
        elif kind == 8:
            J = symplectic_gc(4)
            f = NormalForm.func("exp", NormalForm.coord("x1"))
            P = J.P.scale(f)
            sigma = J.sigma.scale(NormalForm.func("exp", -NormalForm.coord("x1")))
            out.append(("non-Poisson rescaled symplectic", GcStructure(J.chart, J.A, P, sigma, J.H)))
        else:
            J = complex_gc(dim)
            B = random_form(rng, J.chart, 2, poly_degree=1)
            # any B works here: the image keeps P = 0 and picks up H = dB
            out.append(("gauged complex", gauge_gc(B, J, trust=True)))
    return out


def _twisted_complex(J: GcStructure, rng) -> GcStructure:
    """Conjugate J0 by a non-constant unipotent matrix (still squares to -Id)."""
    chart = J.chart
    u = random_poly(rng, ["x3", "x4"], 1) + NormalForm.coord("x1")
    U = TensorField.endo(chart, {(i, i): 1 for i in range(chart.dim)} | {(0, 2): u})
    Uinv = TensorField.endo(chart, {(i, i): 1 for i in range(chart.dim)} | {(0, 2): -u})
    A = endo_compose(endo_compose(U, J.A), Uinv)
    return GcStructure(chart, A, J.P, J.sigma, J.H)


# -- reduction corpus ------------------------------------------------------------------

def reduction_block_instance(seed: int):
    """(setup, structure, projectable gauge form) on R^4 satisfying the hypotheses.

    Even seeds: blocks (q1, q2, s, c) with N = {c = c0}, a gauge-built
    structure with terms vanishing on N.  Odd seeds: blocks (q1, q2, q3, s)
    with no constraint coordinate, a lifted and gauged first example times an
    s-dependent scaling on the s-direction.
    """
    rng = random.Random(seed)
    if seed % 2 == 0:
        coords = ("q1", "q2", "s", "c")
        chart = ChartManifold(coords)
        q = ["q1", "q2"]
        c0 = Fraction(rng.randint(-2, 2))
        p = random_poly(rng, q, 2) + 2
        P = TensorField.multivector(chart, 2, {(0, 1): p, (2, 3): 1})
        shift = NormalForm.coord("c") - NormalForm.const(c0)
        B = TensorField.form(chart, 2, {(0, 1): random_poly(rng, q, 2),
                                        (2, 3): shift * random_poly(rng, ["q1", "s", "c"], 1)})
        S = gauge_of_poisson(P, B, trust=True)
        setup = AdaptedReductionSetup(chart, ("q1", "q2"), ("s",), ("c",), (c0,))
        G = TensorField.form(chart, 2, {(0, 1): random_poly(rng, q, 2),
                                        (1, 3): shift * random_poly(rng, coords, 1)})
        return setup, S, G
    coords = ("q1", "q2", "q3", "s")
    fs = ["1+q1^2", "2+q2^2", "1+q1^2+q2^2", "3+q3^2"]
    gs = ["q3", "q3^2", "1+q3", "2*q3-1"]
    f = E(rng.choice(fs), coords)
    g = E(rng.choice(gs), coords)
    a = E(rng.choice(["s", "1+s^2", "2", "s^3"]), coords)
    chart = ChartManifold(coords, (f,))
    P = TensorField.multivector(chart, 2, {(0, 1): f})
    A = TensorField.endo(chart, {(0, 0): g, (1, 1): g, (2, 2): g, (3, 3): a})
    H = TensorField.form(chart, 3, {(0, 1, 2): -g.diff("q3") / f})
    S = PqNbStructure(chart, P, A, H.scale(-2 * g), H)
    q = ["q1", "q2", "q3"]
    B = random_form(rng, chart, 2, coords=q, poly_degree=1)
    B = TensorField.form(chart, 2, {k: v for k, v in B.comps.items() if 3 not in k})
    S = gauge_transform(B, S, trust=True)
    setup = AdaptedReductionSetup(chart, ("q1", "q2", "q3"), ("s",), (), ())
    G = random_form(rng, chart, 2, coords=q, poly_degree=1)
    G = TensorField.form(chart, 2, {k: v for k, v in G.comps.items() if 3 not in k})
    return setup, S, G


def lifted_first_example_constraint():
    """First example lifted to (q1, q2, c, s) with A = g(c) Id and N = {c = 0}.

    The background has a dq1^dq2^dc component, so the hypothesis on E-contractions fails.
    """
    coords = ("q1", "q2", "c", "s")
    f = E("1+q1^2", coords)
    g = E("c", coords)
    chart = ChartManifold(coords, (f,))
    P = TensorField.multivector(chart, 2, {(0, 1): f})
    A = TensorField.identity(chart, g)
    H = TensorField.form(chart, 3, {(0, 1, 2): -g.diff("c") / f})
    S = PqNbStructure(chart, P, A, H.scale(-2 * g), H)
    return AdaptedReductionSetup(chart, ("q1", "q2"), ("s",), ("c",), (0,)), S


def gc_reduction_example():
    """Symplectic q-block and complex structures on the s-block and the c-block (R^6)."""
    coords = ("q1", "q2", "s1", "s2", "c1", "c2")
    chart = ChartManifold(coords)
    P = TensorField.multivector(chart, 2, {(0, 1): 1})
    sigma = TensorField.form(chart, 2, {(0, 1): 1})
    A = standard_complex(chart, [(2, 3), (4, 5)])
    J = GcStructure.make(chart, A=A, P=P, sigma=sigma)
    setup = AdaptedReductionSetup(chart, ("q1", "q2"), ("s1", "s2"), ("c1", "c2"), (0, 0))
    return setup, J


# -- non-uniqueness and obstruction witnesses ---------------------------------------------

def degenerate_two_backgrounds(seed: int = 0, a: Fraction = Fraction(1), b: Fraction = Fraction(2)):
    """Two PqNb structures on R^4 sharing (P, A, phi) with different backgrounds.

    P = d1^d2 is degenerate.  The first structure is built from a random
    2-form B; the second adds the closed 3-form dx3^dx4^(a dx1 + b dx2),
    which P cannot see.
    """
    rng = random.Random(seed)
    chart = ChartManifold(R4)
    P = TensorField.multivector(chart, 2, {(0, 1): 1})
    first = gauge_of_poisson(P, random_form(rng, chart, 2), trust=True)
    extra = TensorField.form(chart, 3, {(0, 2, 3): a, (1, 2, 3): b})
    second = PqNbStructure(chart, P, first.A, first.phi, first.H + extra)
    return first, second


def null_poisson_obstruction(seed: int) -> PqNbStructure:
    """P = 0 with the non-Nijenhuis A = x2 d1 (x) dx1 and random closed 3-forms on R^3."""
    rng = random.Random(seed)
    chart = ChartManifold(R3)
    P = TensorField.multivector(chart, 2)
    A = TensorField.endo(chart, {(0, 0): NormalForm.coord("x2")})
    phi = random_form(rng, chart, 3, density=1.0)
    H = random_form(rng, chart, 3, density=1.0)
    return PqNbStructure(chart, P, A, phi, H)
