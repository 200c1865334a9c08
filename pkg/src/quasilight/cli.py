"""Command-line front end: ``quasilight run`` and ``quasilight validate``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .runner import PhysicsError, run
from .scenario import ScenarioError, load

EXIT_OK, EXIT_INVALID, EXIT_PHYSICS = 0, 2, 3


def _report_problems(path, err: ScenarioError) -> int:
    print(f"{path}: invalid scenario", file=sys.stderr)
    for p in err.problems:
        print(f"  - {p}", file=sys.stderr)
    return EXIT_INVALID


def cmd_validate(args) -> int:
    try:
        load(args.scenario, args.override)
    except ScenarioError as err:
        return _report_problems(args.scenario, err)
    print(f"{args.scenario}: ok")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        sc = load(args.scenario, args.override)
    except ScenarioError as err:
        return _report_problems(args.scenario, err)
    out = Path(args.out) if args.out else Path(Path(args.scenario).stem + "_out")
    try:
        result = run(sc, out, threads=args.threads)
    except (PhysicsError, ValueError, FloatingPointError) as err:
        print(f"{args.scenario}: physics failure: {err}", file=sys.stderr)
        return EXIT_PHYSICS
    for key, value in result.summary.items():
        print(f"{key}: {value}")
    print(f"wrote {len(result.outputs)} files and manifest.json to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasilight", description="Local-mode quantum optics scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario TOML file")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a scenario key (bare or block.key); repeatable")

    p_run = sub.add_parser("run", parents=[common], help="run a scenario")
    p_run.add_argument("--out", help="output directory (default: <scenario stem>_out)")
    p_run.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", parents=[common], help="check a scenario without running it")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
