"""Command line entry point: ``staralg verify|corpus|moments``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import SchemaError
from .io import (EXIT_ERROR, EXIT_OK, MOMENT_TASKS, emit_report, parse_instance,
                 run_tasks)


def _run_one(path, args, only=None) -> int:
    try:
        spec = parse_instance(path)
    except SchemaError as exc:
        print(f"{path}: schema errors", file=sys.stderr)
        for loc, msg in exc.errors:
            print(f"  {loc}: {msg}", file=sys.stderr)
        return EXIT_ERROR
    if only is not None and not spec.tasks:
        spec.tasks = [{"task": t, "sequence": name, **extra}
                      for name in spec.moments
                      for t, extra in (("growth", {}), ("carleman", {"policy": "both"}))]
    code, bundle = run_tasks(spec, seed=args.seed, tol=args.tol, only=only)
    text = emit_report(bundle, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="staralg",
                                     description="Checks for ordered *-algebra instances.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("verify", "run the tasks of one instance file"),
                            ("corpus", "run every instance file in a directory"),
                            ("moments", "run only the moment tasks of an instance file")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("path", type=Path)
        p.add_argument("--seed", type=int, default=None, help="override the instance seed")
        p.add_argument("--tol", type=float, default=None, help="residual gate for check tasks")
        p.add_argument("--format", choices=("text", "structured"), default="text")
        p.add_argument("--out", type=Path, default=None, help="write reports into this directory")
    args = parser.parse_args(argv)

    if args.command == "verify":
        return _run_one(args.path, args)
    if args.command == "moments":
        return _run_one(args.path, args, only=MOMENT_TASKS)
    files = sorted(args.path.glob("*.json"))
    if not files:
        print(f"no instance files in {args.path}", file=sys.stderr)
        return EXIT_ERROR
    worst = EXIT_OK
    for f in files:
        code = _run_one(f, args)
        print(f"{f.name}: exit {code}", file=sys.stderr)
        # 2 (inconsistency) outranks 1 (error)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
