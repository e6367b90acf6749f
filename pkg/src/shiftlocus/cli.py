"""Command-line front end.

Exit codes: 0 success (analyze: inside the shift locus), 1 malformed input,
2 outside, 3 undecided, 4 non-generic configuration, 5 internal invariant
breach or a failed count cross-check.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import serialize as ser
from .dynamics import DEFAULT_BUDGET, is_in_shift_locus, numeric_elamination
from .elamination import build_dynamical
from .errors import (
    AngleResolutionFailure,
    CriticalHit,
    InvariantBreach,
    NonGeneric,
    ShiftLocusError,
)
from .render import render_elamination, render_tree
from .sausage import build_sausage_tree, required_depth
from .tautological import PUBLISHED_N3, beta_series, count_table, n30_recursion

EXIT_OK, EXIT_MALFORMED, EXIT_OUTSIDE, EXIT_UNDECIDED, EXIT_NONGENERIC, EXIT_BREACH = 0, 1, 2, 3, 4, 5


def _read_json(src: str) -> dict:
    """A path, '-' for stdin, or an inline JSON document."""
    if src == "-":
        text = sys.stdin.read()
    elif src.lstrip().startswith("{"):
        text = src
    else:
        with open(src, encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("expected a JSON object")
    return doc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    folder = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, out)


# -- subcommands -------------------------------------------------------------


def cmd_analyze(args) -> int:
    f = ser.polynomial_from_dict(_read_json(args.input))
    verdict = is_in_shift_locus(f, budget=args.budget)
    doc = {
        "q": f.q,
        "coeffs": ser.polynomial_to_dict(f)["coeffs"],
        "verdict": verdict.status,
        "critical_points": [
            {"point": [r.point.real, r.point.imag], "escaped": r.escaped, "height": r.height, "bounded": r.bounded}
            for r in verdict.records
        ],
        "critical_leaves": [],
        "leaves": [],
    }
    code = {"inside": EXIT_OK, "outside": EXIT_OUTSIDE}.get(verdict.status, EXIT_UNDECIDED)
    if verdict.inside:
        try:
            leaves = numeric_elamination(f, args.depth, tol=args.tol)
        except (AngleResolutionFailure, CriticalHit) as exc:
            doc["note"] = f"non-generic: {exc}"
            code = EXIT_NONGENERIC
        else:
            doc["critical_leaves"] = [ser.numeric_leaf_to_dict(l) for l in leaves if l.depth == 0]
            doc["leaves"] = [ser.numeric_leaf_to_dict(l) for l in leaves if l.depth > 0]
    _emit(ser.dumps(doc), args.out)
    return code


def cmd_elaminate(args) -> int:
    C = ser.critical_set_from_dict(_read_json(args.input))
    lam = build_dynamical(C, depth=args.depth)
    _emit(ser.dumps(ser.elamination_to_dict(lam)), args.out)
    return EXIT_OK


def cmd_sausage(args) -> int:
    doc = _read_json(args.input)
    if any(x.get("depth", 0) > 0 for x in doc["leaves"]):
        lam = ser.elamination_from_dict(doc)
    else:
        C = ser.critical_set_from_dict(doc)
        lam = build_dynamical(C, depth=required_depth(C, args.levels))
    tree = build_sausage_tree(lam, args.levels)
    tdoc = ser.tree_to_dict(tree)
    if args.format == "svg":
        _emit(render_tree(tdoc), args.out)
    else:
        _emit(ser.dumps(tdoc), args.out)
    if args.svg:
        _emit(render_tree(tdoc), args.svg)
    return EXIT_OK


def _count_checks(table, check_recursion: bool, check_series: bool) -> list:
    problems = []
    enum0 = [row[0] for row in table.rows]
    for n, row in enumerate(table.rows[: len(PUBLISHED_N3)]):
        if tuple(row) != tuple(PUBLISHED_N3[n]):
            problems.append(f"row {n}: enumeration {list(row)} != golden {list(PUBLISHED_N3[n])}")
    top = max(30, table.n_max)
    rec = n30_recursion(top) if check_recursion else None
    series = list(beta_series(top + 1).reduced) if check_series else None
    for n in range(top + 1):
        vals = {}
        if n < len(enum0):
            vals["enumeration"] = enum0[n]
        if rec is not None:
            vals["recursion"] = rec[n]
        if series is not None:
            vals["series"] = series[n]
        if len(set(vals.values())) > 1:
            problems.append(f"N3({n},0) disagrees: {vals}")
    return problems


def cmd_count(args) -> int:
    table = count_table(args.nmax)
    if args.format == "json":
        _emit(table.to_json() + "\n", args.out)
    else:
        _emit(table.to_csv(), args.out)
    if args.check_recursion or args.check_series:
        problems = _count_checks(table, args.check_recursion, args.check_series)
        for p in problems:
            print(p, file=sys.stderr)
        if problems:
            return EXIT_BREACH
    return EXIT_OK


def cmd_render(args) -> int:
    doc = _read_json(args.input)
    kind = ser.artifact_kind(doc)
    if kind == "tree":
        svg = render_tree(doc)
    elif kind in ("elamination", "analysis"):
        svg = render_elamination(doc, size=args.size)
    else:
        raise ValueError(f"cannot render a {kind} document")
    _emit(svg, args.out)
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (written atomically); default stdout")
    common.add_argument("--format", choices=["json", "csv", "svg"], default=None)
    common.add_argument("--seed-free", action="store_true", help="reserved; every command is deterministic")
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    p = argparse.ArgumentParser(prog="shiftlocus", description="Shift-locus elaminations, sausage trees and counts.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="shift-locus verdict and critical leaves of a polynomial")
    a.add_argument("input", help="polynomial JSON: path, '-' or inline")
    a.add_argument("--depth", type=int, default=0, help="also pull the leaves back numerically")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("elaminate", parents=[common], help="pull back a critical set")
    e.add_argument("input", help="critical set JSON")
    e.add_argument("--depth", type=int, default=3)
    e.set_defaults(func=cmd_elaminate)

    s = sub.add_parser("sausage", parents=[common], help="sausage tree of an elamination")
    s.add_argument("input", help="elamination or critical set JSON")
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--svg", help="also write the tree diagram here")
    s.set_defaults(func=cmd_sausage)

    c = sub.add_parser("count", parents=[common], help="component counts of the degree-3 tautological elamination")
    c.add_argument("--nmax", type=int, default=12)
    c.add_argument("--check-recursion", action="store_true")
    c.add_argument("--check-series", action="store_true")
    c.set_defaults(func=cmd_count)

    r = sub.add_parser("render", parents=[common], help="SVG of an elamination, analysis or tree JSON")
    r.add_argument("input")
    r.add_argument("--size", type=int, default=480)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonGeneric as exc:
        print(f"non-generic: {exc}", file=sys.stderr)
        return EXIT_NONGENERIC
    except InvariantBreach as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except (ShiftLocusError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
