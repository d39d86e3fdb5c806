"""Command-line front end.

Exit codes: 0 success, 1 failed checks, 2 input or usage errors, 3 fuel
exhaustion.  ``TERMLAB_FUEL`` overrides the default fuel.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from .abstract import (
    GammaEngine,
    check_decomposition,
    fixture_triple,
    fixture_universe,
    hypothesis_check,
    lifting_measure,
    phi,
    search_minimal_modulus,
)
from .bar import FuelExhausted, psi_simple, search_modulus
from .mpo import mpo_measure, mpo_triple
from .relations import (
    NonTerminating,
    RelationSyntaxError,
    check_tree,
    dc_oracle,
    dfs_tree_oracle,
    parse_relation_fixture,
)
from .terms import TermSyntaxError, parse_term
from .trs import (
    BoundEngine,
    Trs,
    TrsSyntaxError,
    ground_terms,
    orient,
    parse_trs,
    validate_approximation,
)

DEFAULT_FUEL = 10**6
EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_FUEL = 0, 1, 2, 3
# Trees longer than this are reported by length only.
DEFAULT_PRINT_LIMIT = 10_000
# Universe used for the decomposition and measure checks of a rewrite system.
CHECK_UNIVERSE_SIZE = 3


class InputError(Exception):
    pass


def fuel_from_env() -> int:
    raw = os.environ.get("TERMLAB_FUEL")
    if raw is None:
        return DEFAULT_FUEL
    try:
        fuel = int(raw)
    except ValueError:
        raise InputError(f"TERMLAB_FUEL must be a positive integer, got {raw!r}") from None
    if fuel <= 0:
        raise InputError(f"TERMLAB_FUEL must be a positive integer, got {raw!r}")
    return fuel


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="termlab", description="Derivation trees and complexity bounds for finitely branching orders.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_k=True):
        p.add_argument("file", help="rewrite system (.trs) or relation fixture (.rel)")
        if with_k:
            p.add_argument("--k", type=_nonneg, default=None, help="approximation bound (default: max rhs size)")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("check", help="orientation, decomposition, measure and step checks")
    common(p)
    p.add_argument("--bound", type=_nonneg, default=4, help="ground-term size bound for the step check")

    p = sub.add_parser("derive", help="emit a derivation tree")
    common(p)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--term", help="term in prefix syntax (rewrite systems)")
    target.add_argument("--element", type=int, help="element (relation fixtures)")
    p.add_argument("--path", choices=("gamma", "psi"), default="gamma")
    p.add_argument("--force", action="store_true", help="skip the preliminary checks")
    p.add_argument("--limit", type=_nonneg, default=DEFAULT_PRINT_LIMIT, help="print trees up to this length")

    p = sub.add_parser("dc", help="derivation-tree bound against the longest rewrite sequence")
    common(p)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--term")
    target.add_argument("--sweep", type=_nonneg, metavar="SIZE", help="all ground terms up to SIZE")
    p.add_argument("--path", choices=("gamma", "psi"), default="gamma")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("rel", help="inspect an element of a relation fixture")
    common(p, with_k=False)
    p.add_argument("--element", type=int, required=True)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fuel = fuel_from_env()
        handler = {"check": cmd_check, "derive": cmd_derive, "dc": cmd_dc, "rel": cmd_rel}[args.command]
        return handler(args)
    except (InputError, TrsSyntaxError, RelationSyntaxError, TermSyntaxError, OSError) as exc:
        print(f"termlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FuelExhausted, NonTerminating) as exc:
        print(f"termlab: out of fuel: {exc}", file=sys.stderr)
        return EXIT_FUEL


# Loading


def _is_fixture(path: str, text: str) -> bool:
    if path.endswith(".rel"):
        return True
    if path.endswith(".trs"):
        return False
    first = next((ln.split("#", 1)[0].strip() for ln in text.splitlines() if ln.split("#", 1)[0].strip()), "")
    return first == "REL"


def load(path: str):
    text = Path(path).read_text(encoding="utf-8")
    if _is_fixture(path, text):
        return "rel", parse_relation_fixture(text)
    return "trs", parse_trs(text)


def _parse_term_arg(trs: Trs, text: str):
    try:
        return parse_term(text, trs.signature, {name: i for i, name in enumerate(trs.variables)})
    except TermSyntaxError as exc:
        raise InputError(f"--term: {exc}") from None


# Output


def emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for line in lines:
            print(line)


def _show_tree(d, show, limit: int):
    if d.length > limit:
        return None
    return [show(x) for x in d]


# Commands


def _trs_checks(args, trs: Trs):
    cfg = trs.config(args.k)
    verdicts = orient(cfg, trs)
    triple = mpo_triple(cfg)
    universe = cfg.codec.enumerate_up_to(CHECK_UNIVERSE_SIZE)
    decomposition = check_decomposition(triple, universe)
    hypothesis = hypothesis_check(triple, mpo_measure(cfg), universe, args.fuel)
    steps = validate_approximation(cfg, trs, getattr(args, "bound", 4))
    ok = all(v.oriented for v in verdicts) and not decomposition and not hypothesis and not steps
    payload = {
        "k": cfg.k,
        "rules": [asdict(v) for v in verdicts],
        "decomposition": [str(v) for v in decomposition],
        "hypothesis": [str(v) for v in hypothesis],
        "steps": [asdict(s) for s in steps],
        "ok": ok,
    }
    lines = [f"k = {cfg.k}"]
    for v in verdicts:
        lines.append(f"{'oriented    ' if v.oriented else 'NOT ORIENTED'}  {v.rule}")
    lines.append(f"decomposition laws on terms of size <= {CHECK_UNIVERSE_SIZE}: {len(decomposition)} violation(s)")
    lines += [f"  {v}" for v in decomposition[:20]]
    lines.append(f"measure hypothesis on terms of size <= {CHECK_UNIVERSE_SIZE}: {len(hypothesis)} violation(s)")
    lines += [f"  {v}" for v in hypothesis[:20]]
    lines.append(f"rewrite steps from ground terms of size <= {getattr(args, 'bound', 4)}: {len(steps)} not decreasing")
    lines += [f"  {s.term} -> {s.reduct}" for s in steps[:20]]
    lines.append("ok" if ok else "FAILED")
    return cfg, ok, payload, lines


def _fixture_checks(tables: dict):
    t = fixture_triple(tables)
    universe = fixture_universe(tables)
    decomposition = check_decomposition(t, universe)
    hypothesis = hypothesis_check(t, lifting_measure(t), universe)
    ok = not decomposition and not hypothesis
    payload = {
        "decomposition": [str(v) for v in decomposition],
        "hypothesis": [str(v) for v in hypothesis],
        "ok": ok,
    }
    lines = [
        f"decomposition laws: {len(decomposition)} violation(s)",
        *[f"  {v}" for v in decomposition],
        f"measure hypothesis: {len(hypothesis)} violation(s)",
        *[f"  {v}" for v in hypothesis],
        "ok" if ok else "FAILED",
    ]
    return ok, payload, lines


def cmd_check(args) -> int:
    kind, obj = load(args.file)
    if kind == "rel":
        ok, payload, lines = _fixture_checks(obj)
    else:
        _, ok, payload, lines = _trs_checks(args, obj)
    emit(args, payload, lines)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_derive(args) -> int:
    kind, obj = load(args.file)
    if kind == "rel":
        if args.element is None:
            raise InputError("relation fixtures take --element")
        t = fixture_triple(obj)
        x, show = args.element, str
        if args.path == "gamma":
            d = GammaEngine(t, lifting_measure(t), args.fuel).tree(x)
        else:
            d = phi(t, search_minimal_modulus(t, args.fuel), x, args.fuel)
        succ = t.succ
    else:
        trs = obj
        if args.term is None:
            raise InputError("rewrite systems take --term")
        if not args.force:
            _, ok, _, lines = _trs_checks(args, trs)
            if not ok:
                print("\n".join(lines), file=sys.stderr)
                print("termlab: checks failed (use --force to derive anyway)", file=sys.stderr)
                return EXIT_FAILED
        x = _parse_term_arg(trs, args.term)
        engine = BoundEngine(trs.config(args.k), trs, args.path, args.fuel)
        d = engine.tree(x)
        succ, show = engine.triple.succ, trs.show
    if not check_tree(succ, x, d):
        print("termlab: constructed sequence is not a derivation tree", file=sys.stderr)
        return EXIT_FAILED
    flat = _show_tree(d, show, args.limit)
    payload = {"root": show(x), "length": d.length, "tree": flat, "path": args.path}
    lines = [f"root: {show(x)}", f"length: {d.length}"]
    lines.append(f"tree: [{', '.join(flat)}]" if flat is not None else f"tree: longer than {args.limit} entries, not printed")
    emit(args, payload, lines)
    return EXIT_OK


def cmd_dc(args) -> int:
    kind, trs = load(args.file)
    if kind != "trs":
        raise InputError("dc works on rewrite systems")
    if not args.force:
        _, ok, _, lines = _trs_checks(args, trs)
        if not ok:
            print("\n".join(lines), file=sys.stderr)
            print("termlab: checks failed (use --force to continue)", file=sys.stderr)
            return EXIT_FAILED
    cfg = trs.config(args.k)
    engine = BoundEngine(cfg, trs, args.path, args.fuel)
    if args.term is not None:
        terms = [_parse_term_arg(trs, args.term)]
    else:
        terms = ground_terms(cfg.codec, args.sweep)
    rows = []
    lines = [f"{'term':<36} {'bound':>24} {'actual':>7}"]
    for t in terms:
        row = engine.row(t)
        rows.append(row)
        bound = str(row.bound) if len(str(row.bound)) <= 24 else f"{row.bound:.3e}"
        lines.append(f"{row.term:<36} {bound:>24} {row.actual:>7}{'' if row.ok else '  VIOLATION'}")
    bad = [r for r in rows if not r.ok]
    lines.append(f"{len(rows)} term(s), {len(bad)} violation(s), k = {cfg.k}, path = {args.path}")
    payload = {
        "k": cfg.k,
        "path": args.path,
        "rows": [{"term": r.term, "bound": r.bound, "actual": r.actual, "ok": r.ok} for r in rows],
        "violations": len(bad),
    }
    emit(args, payload, lines)
    return EXIT_OK if not bad else EXIT_FAILED


def cmd_rel(args) -> int:
    kind, tables = load(args.file)
    if kind != "rel":
        raise InputError("rel works on relation fixtures")
    r = tables["succ"]
    x = args.element
    tree = dfs_tree_oracle(r, x, args.fuel)
    simple = psi_simple(r, search_modulus(r, args.fuel), [x], args.fuel)
    if simple != tree:  # pragma: no cover - would be a bug in the functional
        print("termlab: bar-recursive tree disagrees with the depth-first tree", file=sys.stderr)
        return EXIT_FAILED
    payload = {
        "element": x,
        "successors": list(r.successors(x)),
        "tree": list(tree),
        "length": tree.length,
        "dc": dc_oracle(r, x, args.fuel),
    }
    lines = [
        f"element: {x}",
        f"successors: {payload['successors']}",
        f"tree: {payload['tree']}",
        f"length: {payload['length']}",
        f"dc: {payload['dc']}",
    ]
    emit(args, payload, lines)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
