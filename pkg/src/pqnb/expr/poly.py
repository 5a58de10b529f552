"""Canonical form of scalar expressions.

A :class:`NormalForm` is a sparse polynomial over Q whose generators are
coordinate names and transcendental kernels (``exp(u)``, ``sin(u)``,
``cos(u)`` with ``u`` itself in normal form), divided by a product of
normalized polynomial factors.  Products of exponential kernels are merged
into a single kernel, so a monomial carries at most one ``exp`` generator,
always with exponent one.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

FUNCTIONS = ("exp", "sin", "cos")

Coeff = Union[int, Fraction]
Mono = tuple  # sorted tuple of (generator, exponent) pairs


class NearSingularError(ArithmeticError):
    """Raised when evaluation divides by a value below the guard."""


class Kernel:
    __slots__ = ("func", "arg", "key")

    def __init__(self, func: str, arg: "NormalForm", key: str):
        self.func = func
        self.arg = arg
        self.key = key

    def __repr__(self):
        return f"Kernel({self.key})"


_KERNELS: dict[str, Kernel] = {}


def _kernel_key(func: str, arg: "NormalForm") -> str:
    from .ast import to_text

    key = f"{func}({to_text(arg.to_expr())})"
    if key not in _KERNELS:
        _KERNELS[key] = Kernel(func, arg, key)
    return key


def kernel(gen: str) -> Kernel | None:
    return _KERNELS.get(gen) if "(" in gen else None


def _c(v) -> Coeff:
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v.numerator)
    return v


def _mono_key(m: Mono):
    return (sum(e for _, e in m), m)


def _normalize_mono(exps: dict) -> Mono:
    exp_gens = [g for g in exps if g.startswith("exp(")]
    if len(exp_gens) > 1 or any(exps[g] != 1 for g in exp_gens):
        total = ZERO
        for g in exp_gens:
            total = total + _KERNELS[g].arg * exps.pop(g)
        if not total.is_zero_exact():
            g = _kernel_key("exp", total)
            exps[g] = exps.get(g, 0) + 1
    return tuple(sorted((g, e) for g, e in exps.items() if e))


@lru_cache(maxsize=1 << 17)
def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for g, e in b:
        exps[g] = exps.get(g, 0) + e
    return _normalize_mono(exps)


class Poly:
    """Sparse polynomial: mapping monomial -> nonzero rational coefficient."""

    __slots__ = ("terms", "_key", "_hash")

    def __init__(self, terms: dict | None = None):
        self.terms = terms if terms is not None else {}
        self._key = None
        self._hash = None

    @property
    def key(self):
        if self._key is None:
            self._key = tuple(sorted(self.terms.items(), key=lambda kv: _mono_key(kv[0])))
        return self._key

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key)
        return self._hash

    def __repr__(self):
        return f"Poly({self.key!r})"

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant(self) -> Coeff:
        return self.terms.get((), 0)

    def gens(self) -> set:
        return {g for m in self.terms for g, _ in m}

    def has_exp(self) -> bool:
        return any(g.startswith("exp(") for m in self.terms for g, _ in m)

    def has_kernels(self) -> bool:
        return any("(" in g for m in self.terms for g, _ in m)


def pconst(c) -> Poly:
    c = _c(Fraction(c))
    return Poly({(): c} if c else {})


def padd(p: Poly, q: Poly, sign: int = 1) -> Poly:
    if not q.terms:
        return p
    if not p.terms and sign == 1:
        return q
    out = dict(p.terms)
    for m, c in q.terms.items():
        v = out.get(m, 0) + (c if sign == 1 else -c)
        if v:
            out[m] = _c(v)
        else:
            out.pop(m, None)
    return Poly(out)


def pscale(p: Poly, s) -> Poly:
    if not s:
        return Poly()
    if s == 1:
        return p
    return Poly({m: _c(c * s) for m, c in p.terms.items()})


def pmul(p: Poly, q: Poly) -> Poly:
    if not p.terms or not q.terms:
        return Poly()
    if len(q.terms) == 1 and () in q.terms:
        return pscale(p, q.terms[()])
    if len(p.terms) == 1 and () in p.terms:
        return pscale(q, p.terms[()])
    out: dict = {}
    for m1, c1 in p.terms.items():
        for m2, c2 in q.terms.items():
            m = mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return Poly({m: _c(c) for m, c in out.items()})


def ppow(p: Poly, k: int) -> Poly:
    result = pconst(1)
    base = p
    while k:
        if k & 1:
            result = pmul(result, base)
        k >>= 1
        if k:
            base = pmul(base, base)
    return result


def pdiv_exact(p: Poly, d: Poly) -> Poly | None:
    """Return q with p = q*d, or None when d does not divide p.

    ``d`` must be free of exponential kernels (their products merge, so the
    plain exponent-vector arithmetic used here would not apply).
    """
    if d.is_constant():
        return pscale(p, Fraction(1) / Fraction(d.constant()))
    gens = sorted(p.gens() | d.gens())
    idx = {g: i for i, g in enumerate(gens)}
    n = len(gens)

    def vec(m):
        v = [0] * n
        for g, e in m:
            v[idx[g]] = e
        return tuple(v)

    rem = {vec(m): c for m, c in p.terms.items()}
    dv = {vec(m): c for m, c in d.terms.items()}
    lt = max(dv)
    lc = Fraction(dv[lt])
    quot = {}
    while rem:
        lr = max(rem)
        q = tuple(a - b for a, b in zip(lr, lt))
        if min(q) < 0:
            return None
        cq = rem[lr] / lc
        quot[q] = cq
        for m, c in dv.items():
            k = tuple(a + b for a, b in zip(q, m))
            v = rem.get(k, 0) - cq * c
            if v:
                rem[k] = v
            else:
                rem.pop(k, None)
    return Poly({tuple((gens[i], e) for i, e in enumerate(q) if e): _c(c) for q, c in quot.items()})


def _split_divisor(p: Poly):
    """Write p = scale * extra_num^-1 * prod(factors).

    Returns (inverse scale, numerator poly to multiply by, factor list) so that
    1/p = inv_scale * extra_num / prod(f^m).
    """
    if p.is_zero():
        raise ZeroDivisionError("division by the zero expression")
    factors = []
    extra_num = pconst(1)
    # monomial content
    content: dict | None = None
    for m in p.terms:
        e = dict(m)
        if content is None:
            content = e
        else:
            content = {g: min(x, e[g]) for g, x in content.items() if g in e}
    content = {g: x for g, x in (content or {}).items() if x}
    if content:
        rest = {}
        for m, c in p.terms.items():
            e = dict(m)
            for g, x in content.items():
                e[g] -= x
            rest[tuple(sorted((g, x) for g, x in e.items() if x))] = c
        p = Poly(rest)
        for g, x in content.items():
            if g.startswith("exp("):
                inv = _kernel_key("exp", -_KERNELS[g].arg)
                extra_num = pmul(extra_num, Poly({((inv, 1),): 1}))
            else:
                factors.append((Poly({((g, 1),): 1}), x))
    if p.is_constant():
        return Fraction(1) / Fraction(p.constant()), extra_num, factors
    lead = max(p.terms, key=_mono_key)
    lc = Fraction(p.terms[lead])
    factors.append((pscale(p, 1 / lc), 1))
    return 1 / lc, extra_num, factors


def _factor_sort(items):
    return tuple(sorted(items, key=lambda fm: (len(fm[0].terms), fm[0].key, fm[1])))


def _den_product(den) -> Poly:
    out = pconst(1)
    for f, m in den:
        out = pmul(out, ppow(f, m))
    return out


def _cancel(num: Poly, den: dict):
    """Divide common factors out of num; den maps factor key -> [poly, mult]."""
    if not num.terms:
        return num, ()
    for k, entry in den.items():
        f, m = entry
        if f.has_exp():
            continue
        while m:
            q = pdiv_exact(num, f)
            if q is None:
                break
            num = q
            m -= 1
        entry[1] = m
    return num, _factor_sort((f, m) for f, m in den.values() if m)


class NormalForm:
    """Canonical scalar function: ``num / prod(f**m for f, m in den)``.

    ``transcendental`` is sticky: it records whether any exp/sin/cos node took
    part in building the value, even if the kernels later cancelled.
    """

    __slots__ = ("num", "den", "transcendental", "_key", "_hash", "_coords")

    def __init__(self, num: Poly, den: tuple = (), transcendental: bool = False):
        self.num = num
        self.den = den if num.terms else ()
        self.transcendental = transcendental
        self._key = None
        self._hash = None
        self._coords = None

    # -- identity -------------------------------------------------------
    @property
    def key(self):
        if self._key is None:
            self._key = (self.num.key, tuple((f.key, m) for f, m in self.den))
        return self._key

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = NormalForm.const(other)
        return isinstance(other, NormalForm) and self.key == other.key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key)
        return self._hash

    def __repr__(self):
        return f"NormalForm({self.text()})"

    def __str__(self):
        return self.text()

    def text(self) -> str:
        from .ast import to_text

        return to_text(self.to_expr())

    # -- constructors ---------------------------------------------------
    @staticmethod
    def const(c) -> "NormalForm":
        return NormalForm(pconst(c))

    @staticmethod
    def coord(name: str) -> "NormalForm":
        return NormalForm(Poly({((name, 1),): 1}))

    @staticmethod
    def func(name: str, arg: "NormalForm") -> "NormalForm":
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        if name == "exp" and arg.is_zero_exact():
            return NormalForm(pconst(1), (), True)
        g = _kernel_key(name, arg)
        return NormalForm(Poly({((g, 1),): 1}), (), True)

    # -- predicates -----------------------------------------------------
    def is_zero_exact(self) -> bool:
        return not self.num.terms

    def is_constant(self) -> bool:
        return not self.den and self.num.is_constant()

    def constant_value(self) -> Fraction:
        return Fraction(self.num.constant())

    def has_kernels(self) -> bool:
        return self.num.has_kernels() or any(f.has_kernels() for f, _ in self.den)

    def coords(self) -> frozenset:
        if self._coords is None:
            out = set()
            for p in (self.num, *(f for f, _ in self.den)):
                for g in p.gens():
                    k = kernel(g)
                    if k is None:
                        out.add(g)
                    else:
                        out |= k.arg.coords()
            self._coords = frozenset(out)
        return self._coords

    # -- arithmetic -----------------------------------------------------
    @staticmethod
    def _lift(x) -> "NormalForm":
        if isinstance(x, NormalForm):
            return x
        if isinstance(x, (int, Fraction)):
            return NormalForm.const(x)
        from .ast import Expr

        if isinstance(x, Expr):
            return x.normal()
        raise TypeError(f"cannot use {type(x).__name__} as a scalar")

    def __add__(self, other):
        other = NormalForm._lift(other)
        t = self.transcendental or other.transcendental
        if not self.den and not other.den:
            return NormalForm(padd(self.num, other.num), (), t)
        if not other.num.terms:
            return NormalForm(self.num, self.den, t)
        if not self.num.terms:
            return NormalForm(other.num, other.den, t)
        fa = {f.key: (f, m) for f, m in self.den}
        fb = {f.key: (f, m) for f, m in other.den}
        lcm = {}
        for k in fa.keys() | fb.keys():
            f = (fa.get(k) or fb.get(k))[0]
            lcm[k] = [f, max(fa.get(k, (f, 0))[1], fb.get(k, (f, 0))[1])]
        ma = pconst(1)
        mb = pconst(1)
        for k, (f, m) in lcm.items():
            da = m - fa.get(k, (f, 0))[1]
            db = m - fb.get(k, (f, 0))[1]
            if da:
                ma = pmul(ma, ppow(f, da))
            if db:
                mb = pmul(mb, ppow(f, db))
        num = padd(pmul(self.num, ma), pmul(other.num, mb))
        num, den = _cancel(num, lcm)
        return NormalForm(num, den, t)

    __radd__ = __add__

    def __neg__(self):
        return NormalForm(pscale(self.num, -1), self.den, self.transcendental)

    def __sub__(self, other):
        return self + (-NormalForm._lift(other))

    def __rsub__(self, other):
        return NormalForm._lift(other) + (-self)

    def __mul__(self, other):
        if hasattr(other, "scale") and not isinstance(other, NormalForm):
            return NotImplemented  # let tensors scale themselves
        other = NormalForm._lift(other)
        if not self.num.terms or not other.num.terms:
            return ZERO
        t = self.transcendental or other.transcendental
        num = pmul(self.num, other.num)
        if not self.den and not other.den:
            return NormalForm(num, (), t)
        den = {}
        for f, m in self.den + other.den:
            if f.key in den:
                den[f.key][1] += m
            else:
                den[f.key] = [f, m]
        num, den_t = _cancel(num, den)
        return NormalForm(num, den_t, t)

    __rmul__ = __mul__

    def inverse(self) -> "NormalForm":
        inv_scale, extra, factors = _split_divisor(self.num)
        num = pscale(pmul(_den_product(self.den), extra), inv_scale)
        den = {}
        for f, m in factors:
            if f.key in den:
                den[f.key][1] += m
            else:
                den[f.key] = [f, m]
        num, den_t = _cancel(num, den)
        return NormalForm(num, den_t, self.transcendental)

    def __truediv__(self, other):
        other = NormalForm._lift(other)
        if other.is_constant():
            c = other.constant_value()
            if not c:
                raise ZeroDivisionError("division by the zero expression")
            return NormalForm(pscale(self.num, 1 / c), self.den, self.transcendental or other.transcendental)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return NormalForm._lift(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k < 0:
            return self.inverse() ** (-k)
        result = ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        if self.transcendental and not result.transcendental:
            result = NormalForm(result.num, result.den, True)
        return result

    # -- calculus -------------------------------------------------------
    def diff(self, x: str) -> "NormalForm":
        if x not in self.coords():
            return ZERO
        dnum = _pdiff(self.num, x)
        if not self.den:
            return dnum
        inv_den = NormalForm(pconst(1), self.den, self.transcendental)
        base = NormalForm(self.num, (), self.transcendental)
        log_d = ZERO
        for f, m in self.den:
            df = _pdiff(f, x)
            if not df.is_zero_exact():
                log_d = log_d + df * m / NormalForm(f)
        return dnum * inv_den - base * inv_den * log_d

    # -- evaluation -----------------------------------------------------
    def evaluate(self, point: Mapping[str, object], guard: float = 0.0, with_scale: bool = False):
        """Evaluate at a point given as name -> number.

        Exact (Fraction) when every coordinate value is rational and no kernel
        is present; float otherwise.  Raises NearSingularError if the
        denominator's magnitude is below ``guard`` (or is exactly zero).
        """
        cache: dict = {}
        den = 1
        for f, m in self.den:
            den = den * _peval(f, point, cache, guard) ** m
        if den == 0 or abs(den) < guard:
            raise NearSingularError(f"denominator {float(den):.3g} below guard")
        total = 0
        scale = 0
        for mono, c in self.num.terms.items():
            v = c
            for g, e in mono:
                v = v * _geval(g, point, cache, guard) ** e
            total = total + v
            if with_scale:
                scale = scale + abs(v)
        value = total / den
        if with_scale:
            return value, scale / abs(den)
        return value

    def subs(self, mapping: Mapping[str, "NormalForm"]) -> "NormalForm":
        if not (self.coords() & set(mapping)):
            return self
        cache: dict = {}
        out = _psubs(self.num, mapping, cache)
        for f, m in self.den:
            out = out / (_psubs(f, mapping, cache) ** m)
        if self.transcendental and not out.transcendental:
            out = NormalForm(out.num, out.den, True)
        return out

    # -- conversion -----------------------------------------------------
    def to_expr(self):
        from .ast import from_normal

        return from_normal(self)


ZERO = NormalForm(Poly())
ONE = NormalForm(pconst(1))


def nf(x) -> NormalForm:
    return NormalForm._lift(x)


@lru_cache(maxsize=1 << 14)
def _kernel_diff(gen: str, x: str) -> NormalForm:
    k = _KERNELS[gen]
    du = k.arg.diff(x)
    if du.is_zero_exact():
        return ZERO
    if k.func == "exp":
        return NormalForm.func("exp", k.arg) * du
    if k.func == "sin":
        return NormalForm.func("cos", k.arg) * du
    return -(NormalForm.func("sin", k.arg) * du)


def _pdiff(p: Poly, x: str) -> NormalForm:
    poly_part: dict = {}
    extra = ZERO
    transcendental = False
    for m, c in p.terms.items():
        for i, (g, e) in enumerate(m):
            if g == x:
                rest = m[:i] + ((g, e - 1),) + m[i + 1:] if e > 1 else m[:i] + m[i + 1:]
                v = poly_part.get(rest, 0) + c * e
                if v:
                    poly_part[rest] = _c(v)
                else:
                    poly_part.pop(rest, None)
            elif "(" in g:
                transcendental = True
                dk = _kernel_diff(g, x)
                if dk.is_zero_exact():
                    continue
                rest = m[:i] + ((g, e - 1),) + m[i + 1:] if e > 1 else m[:i] + m[i + 1:]
                extra = extra + NormalForm(Poly({rest: _c(c * e)})) * dk
    out = NormalForm(Poly(poly_part)) + extra
    if transcendental and not out.transcendental:
        out = NormalForm(out.num, out.den, True)
    return out


def _geval(g: str, point, cache, guard):
    if g in cache:
        return cache[g]
    k = kernel(g)
    if k is None:
        try:
            v = point[g]
        except KeyError:
            raise KeyError(f"no value for coordinate {g!r}") from None
    else:
        a = float(k.arg.evaluate(point, guard))
        v = {"exp": math.exp, "sin": math.sin, "cos": math.cos}[k.func](a)
    cache[g] = v
    return v


def _peval(p: Poly, point, cache, guard):
    total = 0
    for mono, c in p.terms.items():
        v = c
        for g, e in mono:
            v = v * _geval(g, point, cache, guard) ** e
        total = total + v
    return total


def _psubs(p: Poly, mapping, cache) -> NormalForm:
    out = ZERO
    for mono, c in p.terms.items():
        v = NormalForm.const(c)
        for g, e in mono:
            if g not in cache:
                k = kernel(g)
                if k is None:
                    cache[g] = mapping[g] if g in mapping else NormalForm.coord(g)
                else:
                    cache[g] = NormalForm.func(k.func, k.arg.subs(mapping))
            v = v * cache[g] ** e
        out = out + v
    return out
