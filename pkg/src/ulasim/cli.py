"""Command line front end.

Two commands over the same scenario format:

    ulasim run     --scenario s.json --out dir [--seed N] [--defense on|off]
    ulasim compare --scenario s.json --out dir [--seed N]

`run` executes one arm and writes summary.json / timeseries.csv /
isolation.csv; `compare` executes the defense-off baseline and the
configured posture under the same seed and adds compare.json.

Exit codes: 0 success, 1 usage or scenario error, 2 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional

from .addressing import MalformedAddress
from .metrics import RunSummary
from .runner import compare_scenarios, run_scenario
from .scenario import InvalidScenario, IoFailure, parse_scenario

_SUMMARY_ROWS = (
    ("victim_availability", "{:.6f}"),
    ("legit_drop_rate", "{:.6f}"),
    ("attack_delivery_rate", "{:.6f}"),
    ("peak_infected", "{}"),
    ("isolation_events", "{}"),
    ("total_isolated_time_s", "{:.6f}"),
    ("mean_shaping_delay_us", "{:.3f}"),
    ("max_shaping_delay_us", "{}"),
)


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; this artifact
    reserves 2 for invariant violations, so remap to 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _print_summary(title: str, summary: RunSummary) -> None:
    print(title)
    for name, fmt in _SUMMARY_ROWS:
        print(f"  {name:<24} {fmt.format(getattr(summary, name))}")


def _print_comparison(off: RunSummary, on: RunSummary) -> None:
    print("metric                     defense_off   defense_on")
    for name, fmt in _SUMMARY_ROWS:
        left = fmt.format(getattr(off, name))
        right = fmt.format(getattr(on, name))
        print(f"  {name:<24} {left:>11}  {right:>11}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ulasim",
        description="Packet-level simulation of a segmented IoT network under botnet attack.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, summary in (
        ("run", "execute one scenario and write its report files"),
        ("compare", "execute defense-off and defense-on arms under one seed"),
    ):
        p = sub.add_parser(name, help=summary, description=summary)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", required=True, help="output directory for report files")
        p.add_argument("--seed", type=_u64, default=None, help="override the document seed")
        if name == "run":
            p.add_argument(
                "--defense",
                choices=("on", "off"),
                default="on",
                help="on: as configured (default); off: force every defense switch off",
            )
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = parse_scenario(args.scenario)
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
        if args.command == "run":
            if args.defense == "off":
                scenario = scenario.defense_off()
            result = run_scenario(scenario, args.out)
            _print_summary(f"run: {args.scenario} (seed {scenario.seed})", result.summary)
        else:
            off, on = compare_scenarios(scenario, args.out)
            print(f"compare: {args.scenario} (seed {scenario.seed})")
            _print_comparison(off.summary, on.summary)
        return 0
    except (InvalidScenario, IoFailure, MalformedAddress) as exc:
        print(f"ulasim: error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"ulasim: internal invariant violated: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
