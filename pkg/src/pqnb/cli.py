"""Command line front end: ``pqnb {check,gauge,compose,conformal,reduce,commute}``.

Exit codes: 0 pass, 1 a check or hypothesis failed, 2 malformed input.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .expr import DEFAULT_POLICY, ParseError
from .fileformat import KINDS, FileFormatError, StructureFile, dumps, expression, load
from .gauge import (PreconditionError, VerificationFailure, compose_gauges,
                    conformal_change, conformal_gauge_variants, gauge_gc, gauge_transform,
                    inverse_gauge)
from .reduction import (ReductionError, check_reduction_hypotheses, gauge_reduce_commute, reduce,
                        reduce_gc)
from .structures import (Checker, VerificationReport, check_gc_background, check_pn, check_poisson,
                         check_pqn, check_pqnb, tensor_comps)

OK, FAIL, MALFORMED = 0, 1, 2


class UsageError(Exception):
    """Input is well formed but unusable for the requested command."""


def _policy(sf: StructureFile, args):
    p = sf.policy or DEFAULT_POLICY
    if args.seed is not None:
        p = replace(p, seed=args.seed)
    return p


def _kind(sf: StructureFile, args) -> str:
    return args.kind or sf.infer_kind()


def _run_check(sf: StructureFile, kind: str, policy) -> VerificationReport:
    if kind == "poisson":
        return check_poisson(sf.get("P", "vector", 2), policy)
    if kind == "pn":
        return check_pn(sf.get("P", "vector", 2), sf.get("A", "endo", 1), policy)
    if kind == "pqn":
        S = sf.pqnb()
        return check_pqn(S.P, S.A, S.phi, policy)
    if kind == "gc":
        return check_gc_background(sf.gc(), policy)
    return check_pqnb(sf.pqnb(), policy)


def _emit_report(rep: VerificationReport, args, stream=None):
    print(rep.text(), file=stream or sys.stdout)
    if getattr(args, "report", None):
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json() + "\n")


def _emit_structure(sf: StructureFile, args):
    """Write the structure file to --out, or to stdout (reports then go to stderr)."""
    text = dumps(sf)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        return sys.stdout
    sys.stdout.write(text)
    return sys.stderr


def _gauge_form(sf: StructureFile, name: str | None):
    if not sf.gauges:
        raise UsageError("the file has no gauge block")
    if name is None:
        return next(iter(sf.gauges.values()))
    if name not in sf.gauges:
        raise UsageError(f"no gauge block named {name!r}")
    return sf.gauges[name]


# -- commands -------------------------------------------------------------------------

def cmd_check(args) -> int:
    sf = load(args.file)
    rep = _run_check(sf, _kind(sf, args), _policy(sf, args))
    _emit_report(rep, args)
    return OK if rep.ok else FAIL


def _apply_gauge(sf, B, kind, args, policy):
    if kind == "gc":
        return gauge_gc(B, sf.gc(), trust=args.trust, policy=policy)
    return gauge_transform(B, sf.pqnb(), trust=args.trust, policy=policy)


def cmd_gauge(args) -> int:
    sf = load(args.file)
    policy = _policy(sf, args)
    kind = _kind(sf, args)
    B = _gauge_form(sf, args.gauge)
    if args.inverse:
        B = inverse_gauge(B)
    out = _apply_gauge(sf, B, kind, args, policy)
    res = sf.with_structure(out)
    res.gauges = {}
    stream = _emit_structure(res, args)
    rep = _run_check(res, "gc" if kind == "gc" else "pqnb", policy)
    _emit_report(rep, args, stream)
    return OK if rep.ok else FAIL


def cmd_compose(args) -> int:
    """Apply every gauge block in order and compare with the single gauge by their sum."""
    sf = load(args.file)
    policy = _policy(sf, args)
    kind = _kind(sf, args)
    if len(sf.gauges) < 2:
        raise UsageError("compose needs at least two gauge blocks")
    forms = list(sf.gauges.values())
    step = sf
    total = None
    for B in forms:
        S = _apply_gauge(step, B, kind, args, policy)
        step = sf.with_structure(S)
        total = B if total is None else compose_gauges(total, B)
    once = _apply_gauge(sf, total, kind, args, policy)
    res = sf.with_structure(once)
    res.gauges = {}
    stream = _emit_structure(res, args)
    ck = Checker(sf.chart, policy)
    seq = step.gc() if kind == "gc" else step.pqnb()
    diffs = []
    for name in ("P", "A", "phi", "sigma", "H"):
        a, b = getattr(seq, name, None), getattr(once, name, None)
        if a is not None:
            diffs += [((name,) + k, v) for k, v in tensor_comps(a - b)]
    rep = VerificationReport("composition of gauge transformations", policy=policy)
    rep.items.append(ck.item("composition", "G(B_n) o ... o G(B_1) = G(B_1 + ... + B_n)", diffs))
    rep.extend(_run_check(res, "gc" if kind == "gc" else "pqnb", policy), "result: ")
    _emit_report(rep, args, stream)
    return OK if rep.ok else FAIL


def cmd_conformal(args) -> int:
    """e^f P for a Casimir f; with a gauge block, also the two conformal PqNb structures."""
    sf = load(args.file)
    policy = _policy(sf, args)
    if args.function is not None:
        f = expression(args.function, sf.chart)
    elif "f" in sf.functions:
        f = sf.functions["f"]
    else:
        raise UsageError("give --function or a 'function f = ...' line")
    P = sf.get("P", "vector", 2)
    if not sf.gauges:
        Pf = conformal_change(P, f, policy=policy)
        res = replace(sf, tensors={"P": Pf}, functions={})
        stream = _emit_structure(res, args)
        rep = check_poisson(Pf, policy)
        _emit_report(rep, args, stream)
        return OK if rep.ok else FAIL
    B = _gauge_form(sf, args.gauge)
    first, second = conformal_gauge_variants(P, f, B, trust=args.trust, policy=policy)
    chosen = first if args.variant == "first" else second
    res = sf.with_structure(chosen)
    res.gauges, res.functions = {}, {}
    stream = _emit_structure(res, args)
    rep = check_pqnb(chosen, policy)
    _emit_report(rep, args, stream)
    return OK if rep.ok else FAIL


def cmd_reduce(args) -> int:
    sf = load(args.file)
    policy = _policy(sf, args)
    if sf.reduction is None:
        raise UsageError("the file has no reduction block")
    setup = sf.reduction
    kind = _kind(sf, args)
    if kind == "gc":
        red = reduce_gc(setup, sf.gc(), policy)
        out, rep = red.reduced, red.report
        rep.extend(check_gc_background(out, policy), "reduced: ")
    else:
        rep = check_reduction_hypotheses(setup, sf.pqnb(), policy)
        if not rep.ok:
            raise ReductionError("hypotheses fail", rep)
        out = reduce(setup, sf.pqnb(), policy)
        rep.extend(check_pqnb(out, policy), "reduced: ")
    res = sf.with_structure(out, chart=out.chart)
    res.functions = {}
    stream = _emit_structure(res, args)
    _emit_report(rep, args, stream)
    return OK if rep.ok else FAIL


def cmd_commute(args) -> int:
    sf = load(args.file)
    policy = _policy(sf, args)
    if sf.reduction is None:
        raise UsageError("the file has no reduction block")
    B = _gauge_form(sf, args.gauge)
    res = gauge_reduce_commute(sf.reduction, sf.pqnb(), B, policy, trust=args.trust)
    _emit_report(res.report, args)
    for it in res.report.failed():
        print(f"failed condition: {it.label}", file=sys.stderr)
    return OK if res.ok else FAIL


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pqnb", description="Verify and transform PqNb structures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=False, gauge=False):
        p.add_argument("file", help="structure file")
        p.add_argument("--kind", choices=KINDS, help="structure kind (default: inferred)")
        p.add_argument("--report", metavar="PATH", help="also write the report as JSON")
        p.add_argument("--seed", type=int, help="override the sampling seed")
        p.add_argument("--trust", action="store_true", help="skip input and output re-verification")
        if out:
            p.add_argument("-o", "--out", metavar="PATH", help="output structure file (default: stdout)")
        if gauge:
            p.add_argument("--gauge", metavar="NAME", help="gauge block to use (default: the first)")
        return p

    common(sub.add_parser("check", help="check a structure")).set_defaults(func=cmd_check)
    g = common(sub.add_parser("gauge", help="apply a gauge transformation"), out=True, gauge=True)
    g.add_argument("--inverse", action="store_true", help="apply the inverse gauge (-B)")
    g.set_defaults(func=cmd_gauge)
    common(sub.add_parser("compose", help="compose all gauge blocks"), out=True).set_defaults(func=cmd_compose)
    c = common(sub.add_parser("conformal", help="conformal change by a Casimir"), out=True, gauge=True)
    c.add_argument("--function", metavar="EXPR", help="the Casimir f (default: the file's function f)")
    c.add_argument("--variant", choices=("first", "second"), default="first")
    c.set_defaults(func=cmd_conformal)
    common(sub.add_parser("reduce", help="reduce along an adapted chart"), out=True).set_defaults(func=cmd_reduce)
    common(sub.add_parser("commute", help="gauge and reduction commute"), gauge=True).set_defaults(func=cmd_commute)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return MALFORMED if e.code else OK
    try:
        return args.func(args)
    except (FileFormatError, ParseError, UsageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return MALFORMED
    except (PreconditionError, VerificationFailure, ReductionError) as e:
        print(f"error: {e}", file=sys.stderr)
        if e.report is not None:
            print(e.report.text(), file=sys.stderr)
            for it in e.report.failed():
                print(f"failed condition: {it.label}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    raise SystemExit(main())
