"""Scalar expressions: trees, parsing, canonical form and zero testing."""

from .ast import (Add, Div, Expr, Func, Mul, Num, Pow, Sym, as_expr, eval_expr,
                  free_symbols, from_normal, is_rational, structural_diff, to_text)
from .parse import ParseError, UnknownSymbolError, parse_expr
from .poly import ONE, ZERO, NearSingularError, NormalForm, nf
from .zero import (DEFAULT_POLICY, NonZero, SamplingExhaustedError, SamplingPolicy,
                   ZeroExact, ZeroNumeric, ZeroVerdict, canonicalize, diff, evaluate,
                   is_zero, sample_points)

__all__ = [
    "Add", "Div", "Expr", "Func", "Mul", "Num", "Pow", "Sym", "as_expr", "eval_expr",
    "free_symbols", "from_normal", "is_rational", "structural_diff", "to_text",
    "ParseError", "UnknownSymbolError", "parse_expr",
    "ONE", "ZERO", "NearSingularError", "NormalForm", "nf",
    "DEFAULT_POLICY", "NonZero", "SamplingExhaustedError", "SamplingPolicy",
    "ZeroExact", "ZeroNumeric", "ZeroVerdict", "canonicalize", "diff", "evaluate",
    "is_zero", "sample_points",
]
