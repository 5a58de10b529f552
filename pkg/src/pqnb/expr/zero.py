"""Two-tier zero test and the sampling policy behind it."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .ast import Expr, eval_expr
from .poly import NearSingularError, NormalForm, nf


class SamplingExhaustedError(RuntimeError):
    """No admissible sample point could be found (ill-posed nonvanishing set)."""


@dataclass(frozen=True)
class SamplingPolicy:
    points: int = 16
    low: Fraction = Fraction(-2)
    high: Fraction = Fraction(2)
    tol: float = 1e-9
    guard: float = 1e-6
    seed: int = 0
    grid: int = 64  # coordinates are drawn from multiples of 1/grid

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("point count must be at least 1")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if not self.guard > 0:
            raise ValueError("guard must be positive")
        if self.low >= self.high:
            raise ValueError("empty coordinate range")

    def with_seed(self, seed: int) -> "SamplingPolicy":
        return SamplingPolicy(self.points, self.low, self.high, self.tol, self.guard, seed, self.grid)

    def as_dict(self) -> dict:
        return {"points": self.points, "range": [str(self.low), str(self.high)],
                "tol": self.tol, "guard": self.guard, "seed": self.seed}


DEFAULT_POLICY = SamplingPolicy()


@dataclass(frozen=True)
class ZeroExact:
    ok = True
    kind = "exact"

    def as_dict(self) -> dict:
        return {"verdict": "ZeroExact"}


@dataclass(frozen=True)
class ZeroNumeric:
    max_residual: float
    points: int
    ok = True
    kind = "numeric"

    def as_dict(self) -> dict:
        return {"verdict": "ZeroNumeric", "max_residual": self.max_residual, "points": self.points}


@dataclass(frozen=True)
class NonZero:
    witness: dict
    residual: float
    ok = False
    kind = "nonzero"

    def as_dict(self) -> dict:
        return {"verdict": "NonZero", "witness": {k: str(v) for k, v in self.witness.items()},
                "residual": self.residual}


ZeroVerdict = Union[ZeroExact, ZeroNumeric, NonZero]


def _point_stream(policy: SamplingPolicy, coords: Sequence[str]):
    rng = random.Random(policy.seed)
    lo = int(policy.low * policy.grid)
    hi = int(policy.high * policy.grid)
    while True:
        yield {c: Fraction(rng.randint(lo, hi), policy.grid) for c in coords}


def _admissible(point, nonvanishing: Sequence[NormalForm], guard: float) -> bool:
    for g in nonvanishing:
        try:
            v = g.evaluate(point, guard)
        except NearSingularError:
            return False
        if abs(v) < guard:
            return False
    return True


def sample_points(policy: SamplingPolicy, coords: Sequence[str],
                  nonvanishing: Iterable = (), count: int | None = None) -> list:
    """Deterministic admissible sample points for ``coords``."""
    nv = [nf(g) for g in nonvanishing]
    want = policy.points if count is None else count
    out = []
    tries = 0
    for p in _point_stream(policy, list(coords)):
        tries += 1
        if tries > 64 * want + 64:
            raise SamplingExhaustedError(
                f"found only {len(out)} of {want} admissible points after {tries - 1} draws")
        if _admissible(p, nv, policy.guard):
            out.append(p)
            if len(out) == want:
                return out
    return out


def _float_point(p):
    return {k: float(v) for k, v in p.items()}


def is_zero(e, policy: SamplingPolicy = DEFAULT_POLICY, nonvanishing: Iterable = (),
            coords: Sequence[str] | None = None) -> ZeroVerdict:
    """Decide whether ``e`` vanishes identically.

    Expressions free of exp/sin/cos are decided exactly from the canonical
    form; everything else is sampled at ``policy.points`` admissible points.
    """
    n = nf(e)
    nv = [nf(g) for g in nonvanishing]
    if coords is None:
        cs = set(n.coords())
        for g in nv:
            cs |= g.coords()
        coords = sorted(cs)
    if not n.transcendental:
        if n.is_zero_exact():
            return ZeroExact()
        return _exact_witness(n, policy, nv, coords)
    return _numeric(n, policy, nv, coords)


def _exact_witness(n: NormalForm, policy, nv, coords) -> NonZero:
    best = None
    tries = 0
    for p in _point_stream(policy, coords):
        tries += 1
        if tries > 64 * policy.points + 64:
            break
        if not _admissible(p, nv, policy.guard):
            continue
        try:
            v, scale = n.evaluate(p, policy.guard, with_scale=True)
        except NearSingularError:
            continue
        r = abs(float(v))
        if best is None or r > best[1]:
            best = (p, r)
        if r > policy.tol * (1 + float(scale)):
            return NonZero(p, r)
    if best is None:
        raise SamplingExhaustedError("no admissible point to exhibit a nonzero witness")
    # exactly nonzero but tiny at every sampled point; still report the best one
    return NonZero(best[0], best[1])


def _numeric(n: NormalForm, policy, nv, coords) -> ZeroVerdict:
    worst = 0.0
    used = 0
    tries = 0
    for p in _point_stream(policy, coords):
        tries += 1
        if tries > 64 * policy.points + 64:
            raise SamplingExhaustedError(
                f"found only {used} of {policy.points} admissible points after {tries - 1} draws")
        if not _admissible(p, nv, policy.guard):
            continue
        try:
            v, scale = n.evaluate(_float_point(p), policy.guard, with_scale=True)
        except NearSingularError:
            continue
        r = abs(float(v))
        if r > policy.tol * (1 + float(scale)):
            return NonZero(p, r)
        worst = max(worst, r)
        used += 1
        if used == policy.points:
            return ZeroNumeric(worst, used)
    raise AssertionError("unreachable")


def canonicalize(e) -> Expr:
    """Canonical expression tree (idempotent)."""
    from .ast import from_normal

    return from_normal(nf(e))


def diff(e, x: str) -> Expr:
    from .ast import from_normal

    return from_normal(nf(e).diff(x))


def evaluate(e, point: Union[Mapping[str, float], Sequence[float]],
             chart: Sequence[str] | None = None, guard: float = 1e-6) -> float:
    """IEEE double value of ``e`` at ``point``.

    ``point`` is either a name -> value mapping or a sequence ordered like
    ``chart``.  Raises NearSingularError on division by a value below ``guard``.
    """
    if not isinstance(point, Mapping):
        if chart is None:
            raise ValueError("a positional point needs the chart's coordinate list")
        point = list(point)
        if len(point) != len(chart):
            raise ValueError(f"point has {len(point)} values, chart has {len(chart)} coordinates")
        point = dict(zip(chart, point))
    if isinstance(e, Expr):
        return float(eval_expr(e, point, guard))
    return float(nf(e).evaluate({k: float(v) for k, v in point.items()}, guard))
