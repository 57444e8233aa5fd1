"""Command-line interface: ``htwtl check | translate | synthesize | inspect``.

Exit codes: 0 SAT / success, 1 UNSAT / infeasible, 2 usage or input error,
3 resource cap hit (time, state or enumeration limit).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import List, Optional

from .driver import CheckOptions, InstanceTooLarge, check
from .formula import (FormulaError, FragmentKind, HyperFormula, classify, horizon, is_synchronous,
                      parse_hyper, pretty)
from .modelcheck import Timeout
from .synthesis import Infeasible, render_ascii, synthesize
from .tks import ModelError, ProductTooLarge, grid_to_tks, parse_grid, parse_model
from .translate import (UnsupportedFragment, async_to_sync, flatten_exists_forall,
                        hyper_to_twtl)

SCHEMA = 1
EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _colour(text: str, code: str) -> str:
    if os.environ.get("HTWTL_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _formula(args) -> HyperFormula:
    if args.formula_text is not None:
        return parse_hyper(args.formula_text)
    if not args.formula_path:
        raise UsageError("give a formula file or --formula TEXT")
    return parse_hyper(_read(args.formula_path))


def _model(path: str, grid: bool = False):
    text = _read(path)
    if grid or path.endswith(".grid"):
        g = parse_grid(text)
        return grid_to_tks(g), g
    return parse_model(text), None


def _options(args) -> CheckOptions:
    return CheckOptions(k_lim=args.k_lim, time_cap_ms=args.time_cap_ms, state_cap=args.state_cap,
                        threads=args.threads, bound=getattr(args, "bound", None),
                        forall_scope=getattr(args, "forall_scope", "model"))


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)


def cmd_check(args) -> int:
    t0 = time.monotonic()
    m, _ = _model(args.model)
    f = _formula(args)
    t1 = time.monotonic()
    verdict = check(m, f, _options(args))
    t2 = time.monotonic()
    report = {
        "schema": SCHEMA,
        "command": ["check", args.model, args.formula_path or "--formula"],
        "formula": pretty(f),
        "fragment": str(classify(f)),
        "synchronous": is_synchronous(f),
        "stages": verdict.stages,
        "verdict": verdict.to_json(),
    }
    if args.timings:
        report["timings_ms"] = {"load": int((t1 - t0) * 1000), "check": int((t2 - t1) * 1000)}
    print(_dump(report))
    return EXIT_OK if verdict.sat else EXIT_NEGATIVE


def translation_report(f: HyperFormula, families=None) -> dict:
    stages, sync_text = [], None
    g = f
    if not is_synchronous(g):
        g = async_to_sync(g)
        stages.append("async->sync")
        sync_text = pretty(g)
    kind = classify(g).kind
    if kind is FragmentKind.OTHER:
        raise UnsupportedFragment(f"quantifier prefix {classify(g)} is not supported")
    flat_text = None
    if kind is FragmentKind.EXISTS_FORALL:
        g = flatten_exists_forall(g, families)
        stages.append("flatten-exists-forall")
        flat_text = pretty(g)
    tr = hyper_to_twtl(g, families)
    stages.append("hyper->twtl")
    return {
        "schema": SCHEMA,
        "formula": pretty(f),
        "fragment": str(classify(f)),
        "stages": stages,
        "synchronous_rewrite": sync_text,
        "flattened": flat_text,
        "twtl": pretty(tr.twtl),
        "horizon": horizon(tr.twtl),
        "n_copies": tr.n_copies,
        "copies": {v: k for k, v in enumerate(tr.trace_vars, 1)},
        "fresh_props": tr.table.to_json(),
    }


def cmd_translate(args) -> int:
    f = _formula(args)
    families = _model(args.model)[0].families if args.model else None
    rep = translation_report(f, families)
    if args.json:
        print(_dump(rep))
        return EXIT_OK
    lines = [_colour("formula", "1") + f":   {rep['formula']}", f"fragment:  {rep['fragment']}",
             f"stages:    {' -> '.join(rep['stages'])}"]
    if rep["synchronous_rewrite"]:
        lines.append(f"async->sync: {rep['synchronous_rewrite']}")
    if rep["flattened"]:
        lines.append(f"flattened: {rep['flattened']}")
    lines.append(f"n_copies:  {rep['n_copies']}")
    if args.copies_report:
        for v, k in rep["copies"].items():
            lines.append(f"  copy {k}: {v}")
    lines.append(f"horizon:   {rep['horizon']}")
    lines.append("fresh propositions:")
    for row in rep["fresh_props"]:
        lines.append(f"  {row['name']}  {row['text']}")
    if not rep["fresh_props"]:
        lines.append("  (none)")
    lines.append("twtl:")
    lines.append(rep["twtl"])
    print("\n".join(lines))
    return EXIT_OK


def cmd_synthesize(args) -> int:
    m, grid = _model(args.model, args.grid)
    f = _formula(args)
    try:
        plan = synthesize(m, f, _options(args))
    except Infeasible as exc:
        print(_colour("infeasible", "31") + f": {exc}")
        return EXIT_NEGATIVE
    print(_colour("plan", "32") + f": settles at t={plan.total_time} (bound {plan.bound})")
    for var in plan.assignments:
        print(f"{var}: " + " ".join(plan.path(var)))
    if grid is not None:
        print(render_ascii(grid, plan))
    if args.out:
        doc = {"schema": SCHEMA, "command": ["synthesize", args.model, args.formula_path or "--formula"],
               "stages": plan.stages, "plan": plan.to_json()}
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_dump(doc) + "\n")
    return EXIT_OK


def cmd_inspect(args) -> int:
    m, grid = _model(args.model, args.grid)
    doc = {"schema": SCHEMA, "model": m.stats()}
    if grid is not None:
        doc["grid"] = {"width": grid.width, "height": grid.height}
    print(_dump(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="htwtl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def formula_args(sp, positional=True):
        if positional:
            sp.add_argument("formula_path", nargs="?", help="formula file")
        sp.add_argument("--formula", dest="formula_text", help="formula text instead of a file")

    def resource_args(sp):
        sp.add_argument("--k-lim", type=int, help="variability bound; traces end before this time")
        sp.add_argument("--time-cap-ms", type=int, help="wall-clock cap in milliseconds")
        sp.add_argument("--state-cap", type=int, default=10 ** 7, help="product state cap")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for run search")

    c = sub.add_parser("check", help="model check a formula against a model")
    c.add_argument("model")
    formula_args(c)
    resource_args(c)
    c.add_argument("--bound", type=int, help="explicit time bound (overrides the horizon)")
    c.add_argument("--forall-scope", choices=["model", "witnesses"], default="model",
                   help="range of universal variables in exists-forall formulas")
    c.add_argument("--timings", action="store_true", help="include per-stage timings")
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("translate", help="show the plain TWTL translation of a formula")
    formula_args(t)
    t.add_argument("--model", help="model whose proposition families expand comparisons")
    t.add_argument("--copies-report", action="store_true", help="list the copy index of each variable")
    t.add_argument("--json", action="store_true", help="machine-readable output only")
    t.set_defaults(func=cmd_translate)

    s = sub.add_parser("synthesize", help="synthesize witness paths")
    s.add_argument("model", help="model (.tks) or grid (.grid) file")
    formula_args(s)
    resource_args(s)
    s.add_argument("--grid", action="store_true", help="treat the input as a grid file")
    s.add_argument("--out", help="write the plan as JSON to this path")
    s.set_defaults(func=cmd_synthesize)

    i = sub.add_parser("inspect", help="print model statistics")
    i.add_argument("model")
    i.add_argument("--grid", action="store_true")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        code = args.func(args)
        sys.stdout.flush()
        return code
    except (UsageError, FormulaError, ModelError, ValueError) as exc:
        print(f"htwtl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (Timeout, ProductTooLarge, InstanceTooLarge) as exc:
        print(f"htwtl: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
