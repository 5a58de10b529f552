"""Expression trees: construction, printing, structural differentiation and
float evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .poly import FUNCTIONS, NearSingularError, NormalForm, kernel


class Expr:
    """Immutable expression tree node.  Subclasses are frozen dataclasses."""

    def normal(self) -> NormalForm:
        cached = self._normal
        if cached is None:
            cached = self._compute_normal()
            object.__setattr__(self, "_normal", cached)
        return cached

    def _compute_normal(self) -> NormalForm:
        raise NotImplementedError

    def __str__(self):
        return to_text(self)

    # operator sugar: builds trees, does not simplify
    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Num(Fraction(-1)), as_expr(other)))))

    def __rsub__(self, other):
        return Add((as_expr(other), Mul((Num(Fraction(-1)), self))))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Mul((Num(Fraction(-1)), self))

    def __pow__(self, k: int):
        return Pow(self, int(k))


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: Fraction
    _normal: NormalForm | None = field(default=None, compare=False, repr=False)

    def _compute_normal(self):
        return NormalForm.const(self.value)


@dataclass(frozen=True, eq=True)
class Sym(Expr):
    name: str
    _normal: NormalForm | None = field(default=None, compare=False, repr=False)

    def _compute_normal(self):
        return NormalForm.coord(self.name)


@dataclass(frozen=True, eq=True)
class Add(Expr):
    terms: tuple
    _normal: NormalForm | None = field(default=None, compare=False, repr=False)

    def _compute_normal(self):
        out = NormalForm.const(0)
        for t in self.terms:
            out = out + t.normal()
        return out


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    factors: tuple
    _normal: NormalForm | None = field(default=None, compare=False, repr=False)

    def _compute_normal(self):
        out = NormalForm.const(1)
        for f in self.factors:
            out = out * f.normal()
        if any(f.normal().transcendental for f in self.factors) and not out.transcendental:
            out = NormalForm(out.num, out.den, True)
        return out


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exp: int
    _normal: NormalForm | None = field(default=None, compare=False, repr=False)

    def _compute_normal(self):
        if self.exp < 0:
            return _divide(NormalForm.const(1), Pow(self.base, -self.exp))
        return self.base.normal() ** self.exp


@dataclass(frozen=True, eq=True)
class Div(Expr):
    num: Expr
    den: Expr
    _normal: NormalForm | None = field(default=None, compare=False, repr=False)

    def _compute_normal(self):
        return _divide(self.num.normal(), self.den)


@dataclass(frozen=True, eq=True)
class Func(Expr):
    name: str
    arg: Expr
    _normal: NormalForm | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def _compute_normal(self):
        return NormalForm.func(self.name, self.arg.normal())


def _divide(num: NormalForm, den: Expr) -> NormalForm:
    # Divide factor by factor so a product-of-powers denominator keeps its
    # factorization (this is what makes canonicalization idempotent).
    parts = []
    _collect_factors(den, 1, parts)
    out = num
    for e, k in parts:
        d = e.normal()
        out = out / (d ** k) if d.is_constant() else out * (d.inverse() ** k)
    return out


def _collect_factors(e: Expr, k: int, out: list):
    if isinstance(e, Mul):
        for f in e.factors:
            _collect_factors(f, k, out)
    elif isinstance(e, Pow) and e.exp > 0:
        _collect_factors(e.base, k * e.exp, out)
    else:
        out.append((e, k))


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Num(Fraction(x))
    if isinstance(x, NormalForm):
        return from_normal(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an expression")


# -- canonical tree from a normal form ------------------------------------

def _gen_expr(g: str) -> Expr:
    k = kernel(g)
    if k is None:
        return Sym(g)
    return Func(k.func, from_normal(k.arg))


def _poly_expr(p) -> Expr:
    terms = []
    for mono, c in p.key:
        factors = [_gen_expr(g) if e == 1 else Pow(_gen_expr(g), e) for g, e in mono]
        c = Fraction(c)
        if not factors:
            terms.append(Num(c))
        elif c == 1 and len(factors) == 1:
            terms.append(factors[0])
        elif c == 1:
            terms.append(Mul(tuple(factors)))
        else:
            terms.append(Mul((Num(c), *factors)))
    if not terms:
        return Num(Fraction(0))
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def from_normal(n: NormalForm) -> Expr:
    num = _poly_expr(n.num)
    if not n.den:
        out = num
    else:
        factors = [_poly_expr(f) if m == 1 else Pow(_poly_expr(f), m) for f, m in n.den]
        den = factors[0] if len(factors) == 1 else Mul(tuple(factors))
        out = Div(num, den)
    object.__setattr__(out, "_normal", n)
    return out


def canonicalize(e: Expr) -> Expr:
    n = e.normal()
    out = from_normal(n)
    return out


# -- printing -------------------------------------------------------------

def _num_text(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _is_negative_term(e: Expr) -> bool:
    if isinstance(e, Num):
        return e.value < 0
    if isinstance(e, Mul) and e.factors and isinstance(e.factors[0], Num):
        return e.factors[0].value < 0
    return False


def _negate_term(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(-e.value)
    head = -e.factors[0].value
    rest = e.factors[1:]
    if head == 1:
        return rest[0] if len(rest) == 1 else Mul(rest)
    return Mul((Num(head), *rest))


# precedence: sum 1, product 2, unary minus 3, power 4, atom 5
def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Num):
        if e.value < 0:
            return 3
        return 2 if e.value.denominator != 1 else 5
    if isinstance(e, Pow):
        return 4
    return 5


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_text(e)
    return f"({s})" if _prec(e) < min_prec else s


def to_text(e: Expr) -> str:
    """Render an expression in the input grammar."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, 5)}^{e.exp}"
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            if i and _is_negative_term(t):
                parts.append(" - " + _wrap(_negate_term(t), 2))
            elif i:
                parts.append(" + " + _wrap(t, 2))
            else:
                parts.append(_wrap(t, 1))
        return "".join(parts)
    if isinstance(e, Mul):
        if len(e.factors) >= 2 and isinstance(e.factors[0], Num) and e.factors[0].value == -1:
            rest = e.factors[1] if len(e.factors) == 2 else Mul(e.factors[1:])
            return "-" + _wrap(rest, 3)
        out = []
        for i, f in enumerate(e.factors):
            if i == 0 and isinstance(f, Num):
                out.append(_num_text(f.value))
            else:
                out.append(_wrap(f, 3))
        return "*".join(out)
    if isinstance(e, Div):
        return f"{_wrap(e.num, 2)}/{_wrap(e.den, 4)}"
    raise TypeError(f"not an expression: {e!r}")


# -- structural operations --------------------------------------------------

def free_symbols(e: Expr) -> frozenset:
    if isinstance(e, Sym):
        return frozenset((e.name,))
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Add):
        return frozenset().union(*(free_symbols(t) for t in e.terms))
    if isinstance(e, Mul):
        return frozenset().union(*(free_symbols(t) for t in e.factors))
    if isinstance(e, Pow):
        return free_symbols(e.base)
    if isinstance(e, Div):
        return free_symbols(e.num) | free_symbols(e.den)
    if isinstance(e, Func):
        return free_symbols(e.arg)
    raise TypeError(f"not an expression: {e!r}")


def is_rational(e: Expr) -> bool:
    """True when the tree contains no exp/sin/cos node."""
    if isinstance(e, Func):
        return False
    if isinstance(e, (Num, Sym)):
        return True
    if isinstance(e, Add):
        return all(is_rational(t) for t in e.terms)
    if isinstance(e, Mul):
        return all(is_rational(t) for t in e.factors)
    if isinstance(e, Pow):
        return is_rational(e.base)
    if isinstance(e, Div):
        return is_rational(e.num) and is_rational(e.den)
    raise TypeError(f"not an expression: {e!r}")


_ZERO = Num(Fraction(0))
_ONE = Num(Fraction(1))


def structural_diff(e: Expr, x: str) -> Expr:
    """Textbook differentiation rules applied to the tree, no simplification."""
    if isinstance(e, Num):
        return _ZERO
    if isinstance(e, Sym):
        return _ONE if e.name == x else _ZERO
    if isinstance(e, Add):
        return Add(tuple(structural_diff(t, x) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.factors):
            rest = e.factors[:i] + (structural_diff(f, x),) + e.factors[i + 1:]
            terms.append(Mul(rest))
        return Add(tuple(terms))
    if isinstance(e, Pow):
        if e.exp == 0:
            return _ZERO
        return Mul((Num(Fraction(e.exp)), Pow(e.base, e.exp - 1), structural_diff(e.base, x)))
    if isinstance(e, Div):
        top = Add((Mul((structural_diff(e.num, x), e.den)),
                   Mul((Num(Fraction(-1)), e.num, structural_diff(e.den, x)))))
        return Div(top, Pow(e.den, 2))
    if isinstance(e, Func):
        du = structural_diff(e.arg, x)
        if e.name == "exp":
            return Mul((e, du))
        if e.name == "sin":
            return Mul((Func("cos", e.arg), du))
        return Mul((Num(Fraction(-1)), Func("sin", e.arg), du))
    raise TypeError(f"not an expression: {e!r}")


def diff(e: Expr, x: str) -> Expr:
    """Derivative with respect to coordinate ``x``, returned canonicalized."""
    return from_normal(e.normal().diff(x))


def eval_expr(e: Expr, point: Mapping[str, float], guard: float = 1e-6) -> float:
    """IEEE double evaluation of the tree as written."""
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Sym):
        return float(point[e.name])
    if isinstance(e, Add):
        return math.fsum(eval_expr(t, point, guard) for t in e.terms)
    if isinstance(e, Mul):
        v = 1.0
        for f in e.factors:
            v *= eval_expr(f, point, guard)
        return v
    if isinstance(e, Pow):
        b = eval_expr(e.base, point, guard)
        if e.exp < 0 and abs(b) < guard:
            raise NearSingularError(f"base {b:.3g} below guard in negative power")
        return b ** e.exp
    if isinstance(e, Div):
        d = eval_expr(e.den, point, guard)
        if abs(d) < guard:
            raise NearSingularError(f"denominator {d:.3g} below guard")
        return eval_expr(e.num, point, guard) / d
    if isinstance(e, Func):
        a = eval_expr(e.arg, point, guard)
        return {"exp": math.exp, "sin": math.sin, "cos": math.cos}[e.name](a)
    raise TypeError(f"not an expression: {e!r}")
