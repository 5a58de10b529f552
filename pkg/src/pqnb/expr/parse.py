"""Recursive-descent parser for the scalar expression grammar.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' integer)?
    base   := number | symbol | '(' expr ')' | func '(' expr ')'
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping

from .ast import Add, Div, Expr, Func, Mul, Num, Pow, Sym
from .poly import FUNCTIONS


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int = -1):
        self.text = text
        self.pos = pos
        where = f" at position {pos}" if pos >= 0 else ""
        super().__init__(f"{message}{where}")


class UnknownSymbolError(ParseError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # only trailing whitespace left
            break
        if m.group(1) is not None:
            tokens.append(("num", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            tokens.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, chart: Iterable[str], names: Mapping[str, Expr] | None):
        self.text = text
        self.chart = set(chart)
        self.names = dict(names or {})
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value or kind != "op":
            raise ParseError(f"expected {value!r}, found {v or 'end of input'!r}", self.text, pos)

    def fail(self, message: str):
        raise ParseError(message, self.text, self.peek()[2])

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Mul((Num(Fraction(-1)), t)))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Expr:
        e = self.factor()
        factors = [e]
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            f = self.factor()
            if op == "*":
                factors.append(f)
            else:
                num = factors[0] if len(factors) == 1 else Mul(tuple(factors))
                factors = [Div(num, f)]
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def factor(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            inner = self.factor()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Mul((Num(Fraction(-1)), inner))
        b = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            neg = False
            if self.peek()[:2] == ("op", "-"):
                self.take()
                neg = True
            kind, v, pos = self.take()
            if kind != "num":
                raise ParseError("exponent must be an integer", self.text, pos)
            k = int(v)
            return Pow(b, -k if neg else k)
        return b

    def base(self) -> Expr:
        kind, v, pos = self.take()
        if kind == "num":
            return Num(Fraction(int(v)))
        if kind == "name":
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(v, arg)
            if v in self.chart:
                return Sym(v)
            if v in self.names:
                return self.names[v]
            raise UnknownSymbolError(f"unknown symbol {v!r}", self.text, pos)
        if (kind, v) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {v or 'end of input'!r}", self.text, pos)


def parse_expr(text: str, chart: Iterable[str], names: Mapping[str, Expr] | None = None) -> Expr:
    """Parse ``text`` over the coordinate names in ``chart``.

    ``names`` maps extra identifiers to already-built subexpressions, which are
    substituted in place.
    """
    return _Parser(text, chart, names).parse()
