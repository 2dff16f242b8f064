"""Command-line front end.

Subcommands: ``run`` a plan, ``plot`` a report, ``sweep-ess`` to
tabulate the election equilibrium, and ``validate`` a plan file.  The
EGSCFO_OUT_DIR environment variable overrides the default output
directory.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError
from .experiments import AggregateReport, emit_plots, execute, load_plan
from .game import GameContext, ess_probability


def _parse_range(raw, conv=float):
    """A sweep axis: either 'a,b,c' or 'lo:hi:count' (inclusive linspace)."""
    if ":" in raw:
        lo, hi, count = raw.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
        if count < 1:
            raise ValueError("range count must be positive")
        if count == 1:
            return [conv(lo)]
        step = (hi - lo) / (count - 1)
        return [conv(lo + i * step) for i in range(count)]
    return [conv(part) for part in raw.split(",") if part.strip()]


def _out_dir(args):
    return args.out or os.environ.get("EGSCFO_OUT_DIR") or "results"


def cmd_run(args) -> int:
    try:
        plan = load_plan(args.plan)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = _out_dir(args)
    report = execute(plan, out_dir=out, jobs=args.jobs)
    for entry in report.entries:
        print(f"{entry['scenario']} [{entry['mode']}] over {len(entry['seeds'])} seeds: "
              f"lifetime {entry['lifetime_mean']:.1f}, "
              f"attacks {entry['attacks_total_mean']:.1f}, "
              f"timely rate {entry['timely_rate_mean']:.4f}")
    if report.failures:
        for failure in report.failures:
            print(f"FAILED {failure['label']} [{failure['mode']}] "
                  f"seed {failure['seed']}: {failure['error']}", file=sys.stderr)
        return 1
    print(f"report written under {out}")
    return 0


def cmd_plot(args) -> int:
    try:
        with open(args.report, "r", encoding="utf-8") as fh:
            report = AggregateReport.from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    paths = emit_plots(report, _out_dir(args))
    for p in paths:
        print(p)
    return 0


def cmd_sweep_ess(args) -> int:
    try:
        n_values = _parse_range(args.n, int)
        w_values = _parse_range(args.w, float)
        t_values = _parse_range(args.tavr, float)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print("n_players\tw\tt_avr\tp2")
    for n in n_values:
        for w in w_values:
            for t in t_values:
                p2 = ess_probability(GameContext(n, w, t), clamp=False)
                print(f"{n}\t{w:g}\t{t:g}\t{'' if p2 is None else repr(p2)}")
    return 0


def cmd_validate(args) -> int:
    try:
        plan = load_plan(args.plan)
    except (ConfigError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    runs = sum(1 for _ in plan.runs())
    print(f"plan {plan.name!r} valid: {len(plan.scenarios())} scenario(s), "
          f"{len(plan.modes)} mode(s), {len(plan.seeds)} seed(s), {runs} run(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egscfo",
        description="Secure-clustering protocol experiments for sensor networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an experiment plan")
    p.add_argument("plan", help="plan file (INI)")
    p.add_argument("--out", help="output directory (default: results/ or EGSCFO_OUT_DIR)")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="emit plot-data files from a report")
    p.add_argument("report", help="aggregate report (JSON)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("sweep-ess", help="tabulate the election equilibrium")
    p.add_argument("--n", default="2:20:19", help="player counts (list or lo:hi:count)")
    p.add_argument("--w", default="6", help="energy ratios")
    p.add_argument("--tavr", default="0:1:11", help="mean malicious-neighbour trust")
    p.set_defaults(func=cmd_sweep_ess)

    p = sub.add_parser("validate", help="check a plan file")
    p.add_argument("plan", help="plan file (INI)")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
