"""Reader and canonical writer for ``.pqnb`` structure files.

Example::

    manifold dim=3 coords=x1,x2,x3 nonvanishing="1+x1^2"
    bivector P { [1,2] = "1+x1^2" }
    endo A { [1,1]="x3" [2,2]="x3" [3,3]="x3" }
    form phi deg=3 { [1,2,3]="2*x3/(1+x1^2)" }
    gauge B { [2,3]="1" }
    reduction { q=q1,q2 s=s c=c c0=0 }
    policy { seed=42 points=16 tol=1e-9 }

Indices are 1-based.  Multivector and form components are given on strictly
increasing index tuples only; the rest follow by antisymmetry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .expr import ParseError, SamplingPolicy, parse_expr
from .reduction import AdaptedReductionSetup
from .structures import GcStructure, PqNbStructure
from .tensor import ENDO, FORM, VECTOR, ChartManifold, TensorField

TENSOR_KEYWORDS = {"bivector": (VECTOR, 2), "vector": (VECTOR, 1), "endo": (ENDO, 1), "form": (FORM, None)}
KINDS = ("poisson", "pn", "pqn", "pqnb", "gc")


class FileFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<index>\[[^\]\n]*\])
  | (?P<lbrace>\{) | (?P<rbrace>\}) | (?P<eq>=)
  | (?P<word>[A-Za-z0-9_.,+\-/]+)
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int


def _tokenize(text: str) -> list:
    out, pos, line = [], 0, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FileFormatError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
        elif kind not in ("ws", "comment"):
            out.append(_Tok(kind, m.group(), line))
        pos = m.end()
    return out


@dataclass
class StructureFile:
    """Parsed contents of a structure file."""

    chart: ChartManifold
    tensors: dict = field(default_factory=dict)
    gauges: dict = field(default_factory=dict)
    reduction: AdaptedReductionSetup | None = None
    policy: SamplingPolicy | None = None
    functions: dict = field(default_factory=dict)

    # -- views -------------------------------------------------------------------

    def get(self, name: str, kind: str, degree: int):
        t = self.tensors.get(name)
        if t is None:
            if kind == VECTOR:
                return TensorField.multivector(self.chart, degree)
            if kind == ENDO:
                return TensorField.endo(self.chart)
            return TensorField.form(self.chart, degree)
        if t.kind != kind or (kind != ENDO and t.degree != degree):
            raise FileFormatError(f"tensor {name!r} has the wrong type")
        return t

    def infer_kind(self) -> str:
        if "sigma" in self.tensors:
            return "gc"
        if "H" in self.tensors:
            return "pqnb"
        if "phi" in self.tensors:
            return "pqn"
        if "A" in self.tensors:
            return "pn"
        return "poisson"

    def pqnb(self) -> PqNbStructure:
        return PqNbStructure(self.chart, self.get("P", VECTOR, 2), self.get("A", ENDO, 1),
                             self.get("phi", FORM, 3), self.get("H", FORM, 3))

    def gc(self) -> GcStructure:
        return GcStructure(self.chart, self.get("A", ENDO, 1), self.get("P", VECTOR, 2),
                           self.get("sigma", FORM, 2), self.get("H", FORM, 3))

    def with_structure(self, S, chart: ChartManifold | None = None) -> "StructureFile":
        """Copy with the structure tensors replaced by those of ``S``."""
        if isinstance(S, GcStructure):
            parts = {"P": S.P, "A": S.A, "sigma": S.sigma, "H": S.H}
        else:
            parts = {"P": S.P, "A": S.A, "phi": S.phi, "H": S.H}
        tensors = {k: v for k, v in parts.items() if not v.is_zero_exact() or k == "P"}
        return replace(self, chart=chart or S.chart, tensors=tensors,
                       gauges={} if chart else self.gauges,
                       reduction=None if chart else self.reduction)


# -- reading ----------------------------------------------------------------------

class _Reader:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self, k: int = 0):
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def take(self, kind: str | None = None) -> _Tok:
        t = self.peek()
        if t is None:
            last = self.toks[-1].line if self.toks else None
            raise FileFormatError("unexpected end of file", last)
        if kind and t.kind != kind:
            raise FileFormatError(f"expected {kind}, found {t.text!r}", t.line)
        self.pos += 1
        return t

    def options(self) -> list:
        """``key=value`` pairs up to the next statement or brace; values may repeat."""
        out = []
        while True:
            t, eq = self.peek(), self.peek(1)
            if t is None or t.kind != "word" or eq is None or eq.kind != "eq":
                return out
            self.pos += 2
            v = self.peek()
            if v is not None and v.kind in ("word", "string") and not (
                    v.kind == "word" and self.peek(1) is not None and self.peek(1).kind == "eq"):
                self.pos += 1
                out.append((t.text, v.text.strip('"'), t.line))
            else:
                out.append((t.text, "", t.line))


def _split(v: str) -> list:
    return [x for x in v.split(",") if x]


def _index(tok: _Tok, dim: int) -> tuple:
    body = tok.text[1:-1].strip()
    try:
        idx = tuple(int(x) for x in body.split(","))
    except ValueError:
        raise FileFormatError(f"malformed index {tok.text}", tok.line) from None
    for i in idx:
        if not 1 <= i <= dim:
            raise FileFormatError(f"index {i} out of range 1..{dim}", tok.line)
    return tuple(i - 1 for i in idx)


def expression(text: str, chart: ChartManifold, line: int | None = None):
    """Parse a component expression over the chart's coordinates."""
    try:
        return parse_expr(text, chart.coords).normal()
    except ParseError as e:
        raise FileFormatError(f"bad expression {text!r}: {e}", line) from None
    except ZeroDivisionError:
        raise FileFormatError(f"division by zero in {text!r}", line) from None


def _manifold(r: _Reader, head: _Tok) -> ChartManifold:
    opts = r.options()
    keys = {k: v for k, v, _ in opts}
    if "coords" not in keys:
        raise FileFormatError("manifold needs coords=...", head.line)
    coords = tuple(_split(keys["coords"]))
    if len(set(coords)) != len(coords) or not coords:
        raise FileFormatError("coordinates must be distinct and nonempty", head.line)
    for c in coords:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", c):
            raise FileFormatError(f"bad coordinate name {c!r}", head.line)
    if "dim" in keys and keys["dim"] != str(len(coords)):
        raise FileFormatError(f"dim={keys['dim']} does not match {len(coords)} coordinates", head.line)
    chart = ChartManifold(coords)
    for k, v, line in opts:
        if k not in ("dim", "coords", "nonvanishing"):
            raise FileFormatError(f"unknown manifold option {k!r}", line)
    nv = tuple(expression(v, chart, line) for k, v, line in opts if k == "nonvanishing")
    return ChartManifold(coords, nv)


def _tensor(r: _Reader, head: _Tok, chart: ChartManifold, kind: str, degree) -> tuple:
    name = r.take("word")
    opts = {k: (v, line) for k, v, line in r.options()}
    if head.text == "form":
        if "deg" not in opts:
            raise FileFormatError("form needs deg=k", head.line)
        try:
            degree = int(opts["deg"][0])
        except ValueError:
            raise FileFormatError("deg must be an integer", head.line) from None
    r.take("lbrace")
    comps = {}
    while r.peek() is not None and r.peek().kind != "rbrace":
        itok = r.take("index")
        idx = _index(itok, chart.dim)
        r.take("eq")
        vt = r.take()
        if vt.kind not in ("string", "word"):
            raise FileFormatError(f"expected a value, found {vt.text!r}", vt.line)
        want = 2 if kind == ENDO else degree
        if len(idx) != want:
            raise FileFormatError(f"{head.text} {name.text} needs {want} indices, got {itok.text}", itok.line)
        if kind != ENDO and any(a >= b for a, b in zip(idx, idx[1:])):
            raise FileFormatError(f"indices must be strictly increasing, got {itok.text}", itok.line)
        if idx in comps:
            raise FileFormatError(f"duplicate component {itok.text}", itok.line)
        comps[idx] = expression(vt.text.strip('"'), chart, vt.line)
    r.take("rbrace")
    if kind == ENDO:
        return name.text, TensorField.endo(chart, comps)
    if kind == VECTOR:
        return name.text, TensorField.multivector(chart, degree, comps)
    return name.text, TensorField.form(chart, degree, comps)


def _reduction(r: _Reader, head: _Tok, chart: ChartManifold) -> AdaptedReductionSetup:
    r.take("lbrace")
    opts = {k: v for k, v, _ in r.options()}
    r.take("rbrace")
    unknown = set(opts) - {"q", "s", "c", "c0"}
    if unknown:
        raise FileFormatError(f"unknown reduction option {sorted(unknown)[0]!r}", head.line)
    try:
        c0 = tuple(Fraction(x) for x in _split(opts.get("c0", "")))
        return AdaptedReductionSetup(chart, tuple(_split(opts.get("q", ""))), tuple(_split(opts.get("s", ""))),
                                     tuple(_split(opts.get("c", ""))), c0)
    except ValueError as e:
        raise FileFormatError(f"bad reduction block: {e}", head.line) from None


def _policy(r: _Reader, head: _Tok) -> SamplingPolicy:
    r.take("lbrace")
    opts = {k: v for k, v, _ in r.options()}
    r.take("rbrace")
    conv = {"seed": int, "points": int, "tol": float, "guard": float, "grid": int,
            "low": Fraction, "high": Fraction}
    kw = {}
    for k, v in opts.items():
        if k not in conv:
            raise FileFormatError(f"unknown policy option {k!r}", head.line)
        try:
            kw[k] = conv[k](v)
        except ValueError:
            raise FileFormatError(f"bad value for {k}: {v!r}", head.line) from None
    return SamplingPolicy(**kw)


def loads(text: str) -> StructureFile:
    r = _Reader(text)
    if r.peek() is None:
        raise FileFormatError("empty structure file")
    head = r.take("word")
    if head.text != "manifold":
        raise FileFormatError("file must start with a manifold line", head.line)
    out = StructureFile(_manifold(r, head))
    while r.peek() is not None:
        head = r.take("word")
        if head.text in TENSOR_KEYWORDS:
            kind, degree = TENSOR_KEYWORDS[head.text]
            name, t = _tensor(r, head, out.chart, kind, degree)
            if name in out.tensors or name in out.gauges:
                raise FileFormatError(f"tensor {name!r} defined twice", head.line)
            out.tensors[name] = t
        elif head.text == "gauge":
            name, t = _tensor(r, head, out.chart, FORM, 2)
            if name in out.tensors or name in out.gauges:
                raise FileFormatError(f"tensor {name!r} defined twice", head.line)
            out.gauges[name] = t
        elif head.text == "function":
            name = r.take("word").text
            r.take("eq")
            v = r.take("string")
            out.functions[name] = expression(v.text.strip('"'), out.chart, v.line)
        elif head.text == "reduction":
            if out.reduction is not None:
                raise FileFormatError("second reduction block", head.line)
            out.reduction = _reduction(r, head, out.chart)
        elif head.text == "policy":
            if out.policy is not None:
                raise FileFormatError("second policy block", head.line)
            out.policy = _policy(r, head)
        else:
            raise FileFormatError(f"unknown statement {head.text!r}", head.line)
    return out


def load(path) -> StructureFile:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


# -- writing -------------------------------------------------------------------------

def _num(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _block(head: str, t: TensorField) -> list:
    lines = [head + " {"]
    for idx, v in sorted(t.comps.items()):
        lines.append(f"  [{','.join(str(i + 1) for i in idx)}] = \"{v.text()}\"")
    lines.append("}")
    return lines


def dumps(sf: StructureFile) -> str:
    """Canonical text: fixed statement order, sorted components, canonical expressions."""
    ch = sf.chart
    head = f"manifold dim={ch.dim} coords={','.join(ch.coords)}"
    for g in ch.nonvanishing:
        head += f' nonvanishing="{g.text()}"'
    lines = [head]
    order = {"P": 0, "A": 1, "sigma": 2, "phi": 3, "H": 4}
    for name in sorted(sf.tensors, key=lambda n: (order.get(n, 9), n)):
        t = sf.tensors[name]
        if t.kind == ENDO:
            lines += _block(f"endo {name}", t)
        elif t.kind == VECTOR:
            lines += _block(f"{'bivector' if t.degree == 2 else 'vector'} {name}", t)
        else:
            lines += _block(f"form {name} deg={t.degree}", t)
    for name in sorted(sf.functions):
        lines.append(f'function {name} = "{sf.functions[name].text()}"')
    for name, t in sf.gauges.items():
        lines += _block(f"gauge {name}", t)
    if sf.reduction is not None:
        red = sf.reduction
        parts = [f"q={','.join(red.q)}"]
        if red.s:
            parts.append(f"s={','.join(red.s)}")
        if red.c:
            parts.append(f"c={','.join(red.c)}")
            parts.append(f"c0={','.join(_num(v) for v in red.c0)}")
        lines.append("reduction { " + " ".join(parts) + " }")
    if sf.policy is not None:
        p = sf.policy
        lines.append(f"policy {{ seed={p.seed} points={p.points} tol={p.tol!r} guard={p.guard!r} "
                     f"grid={p.grid} low={_num(Fraction(p.low))} high={_num(Fraction(p.high))} }}")
    return "\n".join(lines) + "\n"


def dump(sf: StructureFile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(sf))
