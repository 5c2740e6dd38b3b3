"""Command-line front end.

``novikov report SCENARIO`` runs every command of a scenario file.  The other
subcommands run only the scenario's commands of that kind, or, with
``--target NAME``, that one operation on a single declaration.

Exit codes: 0 when every check passes, 1 when some check fails, 2 for unusable
input (bad JSON, schema violations, unknown names or commands, missing precision).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .scenario import OPS, Scenario, ScenarioError, UnknownCommand, run_scenario


def _fraction(text: str) -> str:
    try:
        Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    return text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="path to a scenario JSON file")
    common.add_argument("--precision", type=int, help="truncation order n for series (work mod z^n)")
    common.add_argument("--stages", type=int, help="number of unrolled copies for unroll-compare")
    common.add_argument("--epsilon", type=_fraction, help="value window for setting-check, e.g. 1/2")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized declarations (default 0)")
    common.add_argument("--timing", action="store_true", help="add wall-clock seconds to each record")
    common.add_argument("--target", help="run the subcommand on this declaration only")

    parser = argparse.ArgumentParser(prog="novikov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("report", parents=[common], help="run every command in the scenario")
    for op in OPS:
        sub.add_parser(op, parents=[common], help=f"run the scenario's {op} commands")
    return parser


def _select(sc: Scenario, args) -> list[dict]:
    if args.command == "report":
        if args.target:
            return [c for c in sc.commands if c["target"] == args.target]
        return list(sc.commands)
    if args.command not in OPS:
        raise UnknownCommand(args.command)
    if args.target:
        sc.kind(args.target)  # resolves or raises
        chosen = [c for c in sc.commands if c["op"] == args.command and c["target"] == args.target]
        return chosen or [{"op": args.command, "target": args.target}]
    return [c for c in sc.commands if c["op"] == args.command]


def _apply_flags(commands: list[dict], args) -> list[dict]:
    out = []
    for cmd in commands:
        cmd = dict(cmd)
        if args.precision is not None:
            cmd["precision"] = args.precision
        if args.stages is not None:
            cmd["stages"] = args.stages
        if args.epsilon is not None:
            cmd["epsilon"] = args.epsilon
        out.append(cmd)
    return out


def format_text(report: dict) -> str:
    lines = [f"scenario {report['scenario'] or '-'}: {report['status'].upper()}"]
    for r in report["results"]:
        extra = []
        for key in ("homology", "novikov_ranks", "congruence_order", "epsilon", "error"):
            if key in r:
                extra.append(f"{key}={json.dumps(r[key], sort_keys=True)}")
        if r["discrepancy"] and "error" not in r:
            extra.append(f"discrepancy={json.dumps(r['discrepancy'], sort_keys=True)}")
        if "inverse" in r:
            extra.append("inverse=" + json.dumps(r["inverse"]))
        if "seconds" in r:
            extra.append(f"seconds={r['seconds']}")
        lines.append(" ".join([r["status"].upper(), r["op"], r["target"]] + extra))
    return "\n".join(lines).rstrip() + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sc = Scenario.load(args.scenario, seed=args.seed)
        commands = _apply_flags(_select(sc, args), args)
        report = run_scenario(sc, commands, timing=args.timing)
    except ScenarioError as exc:
        print(f"novikov: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.format == "json":
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(format_text(report))
    return 0 if report["status"] == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
