"""Command-line interface: ``validate``, ``run`` and ``batch``."""

from __future__ import annotations

import argparse
import json
import sys

from .scenario.config import ConfigError, validate
from .scenario.runner import OUT_ENV, batch, default_out_dir, run


def _cmd_validate(args) -> int:
    try:
        cfg = validate(args.file)
    except ConfigError as e:
        print(f"invalid: {args.file}", file=sys.stderr)
        for err in e.errors:
            print(f"  {err}", file=sys.stderr)
        return 2
    if args.print:
        sys.stdout.write(cfg.to_json())
    else:
        print(f"valid: {args.file} (scenario {cfg.name}, policy {cfg.data['propagator']['policy']})")
    return 0


def _cmd_run(args) -> int:
    try:
        cfg = validate(args.file)
    except ConfigError as e:
        print(f"invalid: {args.file}", file=sys.stderr)
        for err in e.errors:
            print(f"  {err}", file=sys.stderr)
        return 2
    out = args.out if args.out is not None else default_out_dir()
    try:
        res = run(cfg, out)
    except ConfigError as e:
        for err in e.errors:
            print(f"  {err}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 1
    rep = res.report
    print(f"{cfg.name}: {rep['status']}, {rep['rows']} rows, {res.wall_clock['seconds']:.3f} s")
    print(f"  csv:    {res.csv_path}")
    print(f"  report: {res.report_path}")
    if rep["violated"]:
        print(f"  invariants violated: {', '.join(rep['violated'])}")
    if rep["error"]:
        err = rep["error"]
        print(f"  error at step {err['step']} (t = {err['t']}): {err['message']}", file=sys.stderr)
    return res.exit_code


def _cmd_batch(args) -> int:
    try:
        summary = batch(args.pattern, args.jobs, args.out)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    width = max(len(e["scenario"]) for e in summary["scenarios"])
    for e in summary["scenarios"]:
        extra = ""
        if e.get("violated"):
            extra = "  violated: " + ", ".join(e["violated"])
        if e.get("errors"):
            extra += "  " + "; ".join(str(x) for x in e["errors"])
        print(f"{e['scenario']:<{width}}  {e['status']:<7}{extra}")
    print(f"{summary['n_ok']} ok, {summary['n_failed']} failed")
    if args.json:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary["n_failed"] == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quantherm", description="Quantum thermodynamics scenario runner.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="check a scenario file and print the resolved config")
    v.add_argument("file")
    v.add_argument("--print", action="store_true", help="print the resolved config as JSON")
    v.set_defaults(func=_cmd_validate)
    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("file")
    r.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./quantherm_out)")
    r.set_defaults(func=_cmd_run)
    b = sub.add_parser("batch", help="run every scenario matching a glob")
    b.add_argument("pattern")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", default=None)
    b.add_argument("--json", action="store_true", help="also print the aggregated summary as JSON")
    b.set_defaults(func=_cmd_batch)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
