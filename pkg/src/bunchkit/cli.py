"""``bunchkit`` command line: prove, check/transform, corpus regression."""

from __future__ import annotations

import argparse
import json
import sys

from . import lbi, lbiz, metatheory
from .bunch import EMP, Position, parse_bunch
from .formula import ParseError, parse_sequent

EXIT_PROVED, EXIT_REFUTED, EXIT_UNKNOWN = 0, 1, 2
EXIT_USAGE, EXIT_DATA = 64, 65

TRANSFORMS = ("weaken", "ea2", "eqant", "invert", "contract", "eliminate-cut")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bunchkit", description="Proof search and metatheory for propositional BI.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pr = sub.add_parser("prove", help="search for a derivation")
    pr.add_argument("sequent")
    pr.add_argument("--calculus", choices=("lbiz", "lbi"), default="lbiz")
    pr.add_argument("--budget-depth", type=int, default=None)
    pr.add_argument("--budget-nodes", type=int, default=None)
    pr.add_argument("--format", choices=("text", "json", "tex"), default="text")
    pr.add_argument("--disable-rule", action="append", default=[], metavar="RULE")

    ck = sub.add_parser("check", help="validate (and optionally transform) a derivation file")
    ck.add_argument("file")
    ck.add_argument("--transform", choices=TRANSFORMS)
    ck.add_argument("--pos", default="[]", help="position as JSON, e.g. [0] or [[0, 1]]")
    ck.add_argument("--bunch", help="bunch argument (weaken: added part, ea2: pad)")
    ck.add_argument("--kind", choices=metatheory.INVERSIONS)
    ck.add_argument("--direction", choices=metatheory.EQANT_DIRECTIONS)

    co = sub.add_parser("corpus", help="run a metatheory suite on a random corpus")
    co.add_argument("--seed", type=int, default=1)
    co.add_argument("--count", type=int, default=100)
    co.add_argument("--max-size", type=int, default=5)
    co.add_argument("--suite", choices=("equivalence", "admissibility", "cutelim"), default="equivalence")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return {"prove": cmd_prove, "check": cmd_check, "corpus": cmd_corpus}[args.command](args)
    except UsageError as err:
        print(f"bunchkit: {err}", file=sys.stderr)
        return EXIT_USAGE


# -- prove -----------------------------------------------------------------

def _known_rules(calculus: str) -> set:
    rules = set(lbi.LBI_RULES if calculus == "lbi" else lbiz.RULES)
    return rules | {"OrR"}


def cmd_prove(args) -> int:
    try:
        s = parse_sequent(args.sequent)
    except ParseError as err:
        raise UsageError(f"cannot parse sequent: {err}") from None
    unknown = set(args.disable_rule) - _known_rules(args.calculus)
    if unknown:
        raise UsageError(f"unknown rule(s) for {args.calculus}: {', '.join(sorted(unknown))}")
    for name in ("budget_depth", "budget_nodes"):
        value = getattr(args, name)
        if value is not None and value < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    if args.calculus == "lbiz":
        result = lbiz.prove(
            s,
            max_depth=args.budget_depth or lbiz.DEFAULT_DEPTH,
            max_nodes=args.budget_nodes or lbiz.DEFAULT_NODES,
            disabled=args.disable_rule,
        )
    else:
        result = lbi.lbi_prove(
            s,
            max_depth=args.budget_depth or 12,
            max_nodes=args.budget_nodes or 20_000,
            disabled=args.disable_rule,
        )
    _print_verdict(result, args.format, args.calculus)
    return {"proved": EXIT_PROVED, "refuted": EXIT_REFUTED}.get(result.status, EXIT_UNKNOWN)


def verdict_json(result, calculus: str) -> dict:
    out = {"status": result.status}
    if result.status == "proved":
        out["depth"] = result.depth
        out["proof"] = lbiz.to_json(result.derivation, calculus)
    else:
        out["mode"] = result.mode
    return out


def _print_verdict(result, fmt: str, calculus: str) -> None:
    if fmt == "json":
        print(json.dumps(verdict_json(result, calculus), indent=2, ensure_ascii=False))
        return
    if result.status == "proved":
        print(f"% proved, depth {result.depth}" if fmt == "tex" else f"proved (depth {result.depth})")
        print(lbiz.format_tex(result.derivation) if fmt == "tex" else lbiz.format_text(result.derivation))
    else:
        print(f"{'% ' if fmt == 'tex' else ''}{result.status} ({result.mode})")


# -- check -----------------------------------------------------------------

def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        return None, f"invalid JSON: {err}"
    if isinstance(data, dict) and "proof" in data and "rule" not in data:
        data = data["proof"]  # a prove --format json verdict
    try:
        calculus = data.get("calculus", "lbiz") if isinstance(data, dict) else "lbiz"
        return (calculus, lbiz.from_json(data)), None
    except ValueError as err:
        return None, f"malformed derivation: {err}"


def cmd_check(args) -> int:
    loaded, problem = _load(args.file)
    if loaded is None:
        print(f"bunchkit: {problem}", file=sys.stderr)
        return EXIT_DATA
    calculus, d = loaded
    if calculus not in ("lbiz", "lbi"):
        print(f"bunchkit: unknown calculus {calculus!r}", file=sys.stderr)
        return EXIT_DATA
    report = lbi.check_derivation(d) if calculus == "lbi" else lbiz.check_derivation(d, allow_cut=True)
    if not report:
        print(f"invalid at node {list(report.path)}: {report.reason}")
        return 1
    if args.transform is None:
        print("ok")
        return 0
    if calculus != "lbiz":
        raise UsageError("transformations apply to lbiz derivations only")
    try:
        outs = _transform(d, args)
    except metatheory.TransformError as err:
        print(f"transform failed: {err}", file=sys.stderr)
        return 1
    docs = [lbiz.to_json(o, "lbiz") for o in outs]
    print(json.dumps(docs[0] if len(docs) == 1 else docs, indent=2, ensure_ascii=False))
    return 0


def _transform(d, args) -> tuple:
    try:
        pos = Position.from_json(json.loads(args.pos))
    except (json.JSONDecodeError, ValueError) as err:
        raise UsageError(f"bad --pos: {err}") from None
    bunch = None
    if args.bunch is not None:
        try:
            bunch = parse_bunch(args.bunch)
        except ParseError as err:
            raise UsageError(f"bad --bunch: {err}") from None
    t = args.transform
    if t == "weaken":
        if bunch is None:
            raise UsageError("weaken needs --bunch")
        return (metatheory.weaken_derivation(d, pos, bunch),)
    if t == "ea2":
        return (metatheory.ea2_derivation(d, pos, None if bunch == EMP else bunch),)
    if t == "eqant":
        if args.direction is None:
            raise UsageError("eqant needs --direction")
        return (metatheory.eqant_derivation(d, args.direction, pos),)
    if t == "invert":
        if args.kind is None:
            raise UsageError("invert needs --kind")
        return metatheory.invert_derivation(d, args.kind, pos)
    if t == "contract":
        return (metatheory.contract_derivation(d, pos),)
    return (metatheory.eliminate_cuts(d),)


# -- corpus ----------------------------------------------------------------

def cmd_corpus(args) -> int:
    if args.count < 1 or args.max_size < 1:
        raise UsageError("--count and --max-size must be positive")
    rows = corpus_rows(args.suite, args.seed, args.count, args.max_size)
    failures = sum(1 for r in rows if not r["ok"])
    sys.stdout.write(metatheory.dumps_report(rows))
    summary = {"summary": {"suite": args.suite, "seed": args.seed, "cases": len(rows), "failures": failures}}
    if args.suite == "admissibility":
        summary["summary"]["depth_preserved"] = sum(
            1 for r in rows if "out_depth" in r and r["out_depth"] <= r["depth"])
        summary["summary"]["depth_reduced"] = sum(
            1 for r in rows if "out_depth" in r and r["out_depth"] < r["depth"])
    elif args.suite == "equivalence":
        summary["summary"]["lbiz_settled"] = sum(1 for r in rows if r["lbiz"] != "unknown")
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0 if failures == 0 else 1


def corpus_rows(suite: str, seed: int, count: int, max_size: int) -> list:
    if suite == "equivalence":
        return metatheory.run_equivalence(metatheory.sample_sequents(seed, count, max_size))
    base = metatheory.proved_corpus(seed, max(count, 50), max_size)
    extra = metatheory.forward_derivations(seed, base, max(count // 2, 20))
    if suite == "admissibility":
        return metatheory.run_admissibility((base + extra)[:count], seed)
    return metatheory.run_cutelim(metatheory.cut_corpus(seed, count, base + extra))


if __name__ == "__main__":
    sys.exit(main())
