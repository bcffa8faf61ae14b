"""Command-line interface: run batches, validate scenarios, plot traces.

Subcommands:

* ``run``      -- run a trial batch and write CSV reports (and, on request,
                  per-episode trace files and SVG figures),
* ``validate`` -- parse and validate a scenario file,
* ``plot``     -- render an episode trace CSV to SVG.

The output directory defaults to ``./out`` and can be overridden with the
``CTXPLAN_OUT_DIR`` environment variable or ``--out``. Exit status is 0 on
completion and nonzero on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import kernels
from .harness import (
    BatchReport,
    Scenario,
    ScenarioError,
    load_scenario,
    read_episode_trace,
    run_batch,
    write_episode_trace,
    write_executed_csv,
    write_planning_csv,
    write_summary_csv,
    write_trials_csv,
)
from .planner import VARIANT_ORDER, get_variant
from .render import render_svg


def _default_out() -> str:
    return os.environ.get("CTXPLAN_OUT_DIR", "out")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctxplan",
        description="Adaptive kinodynamic replanning testbed",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s (kernels: {kernels.BACKEND})"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a batch of episodes")
    run_p.add_argument("--scenario", required=True, help="scenario JSON file")
    run_p.add_argument(
        "--variant",
        default="all",
        help="planner variant name or 'all' (default: all)",
    )
    run_p.add_argument("--trials", type=int, default=30)
    run_p.add_argument("--seed", type=int, default=0, help="base seed; trial i uses seed+i")
    run_p.add_argument("--jobs", type=int, default=1, help="worker processes")
    run_p.add_argument("--out", default=None, help=f"output directory (default: {_default_out()})")
    run_p.add_argument(
        "--dump-traces",
        action="store_true",
        help="also write per-episode trace, executed-transition, planning CSVs and SVGs",
    )
    run_p.add_argument(
        "--successes-only",
        action="store_true",
        help="restrict replanning statistics to successful episodes",
    )

    val_p = sub.add_parser("validate", help="validate a scenario file")
    val_p.add_argument("--scenario", required=True)

    plot_p = sub.add_parser("plot", help="render an episode trace to SVG")
    plot_p.add_argument("--trace", required=True, help="episode trace CSV")
    plot_p.add_argument("--out", required=True, help="output SVG path")
    plot_p.add_argument(
        "--scenario",
        default=None,
        help="scenario file (defaults to the path embedded in the trace)",
    )
    return parser


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.variant.strip().lower() == "all":
        variants = list(VARIANT_ORDER)
    else:
        variants = [args.variant]
        get_variant(args.variant)  # fail fast on unknown names
    if args.trials < 1:
        raise ScenarioError("--trials must be >= 1")
    if args.jobs < 1:
        raise ScenarioError("--jobs must be >= 1")

    out_dir = Path(args.out if args.out is not None else _default_out())
    out_dir.mkdir(parents=True, exist_ok=True)

    report = run_batch(
        scenario,
        variants=variants,
        trials=args.trials,
        base_seed=args.seed,
        jobs=args.jobs,
        keep_outcomes=args.dump_traces,
        include_failures_in_stats=not args.successes_only,
    )
    write_trials_csv(report, out_dir / "trials.csv")
    write_summary_csv(report, out_dir / "summary.csv")
    table = report.format_table()
    (out_dir / "summary.txt").write_text(table + "\n")

    if args.dump_traces and report.outcomes is not None:
        trace_dir = out_dir / "traces"
        trace_dir.mkdir(exist_ok=True)
        scenario_path = str(Path(args.scenario).resolve())
        for row, outcome in zip(report.rows, report.outcomes):
            stem = f"{row.variant.lower()}_trial{row.trial:03d}"
            write_episode_trace(outcome, trace_dir / f"{stem}.csv", scenario_path)
            write_executed_csv(outcome, trace_dir / f"{stem}_executed.csv")
            write_planning_csv(outcome, trace_dir / f"{stem}_planning.csv")
            render_svg(scenario, outcome, trace_dir / f"{stem}.svg")

    print(table)
    print(f"\nreports written to {out_dir}")
    return 0


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    levels = ", ".join(f"{d:g}" for d in scenario.drift_levels())
    print(
        f"{args.scenario}: ok\n"
        f"  name: {scenario.name}\n"
        f"  obstacles: {len(scenario.world.obstacles)}\n"
        f"  drift levels: {levels}\n"
        f"  start: {scenario.start}  goal: {scenario.world.goal}"
    )
    return 0


def _cmd_plot(args) -> int:
    outcome, meta = read_episode_trace(args.trace)
    scenario_path = args.scenario or meta.get("scenario")
    if not scenario_path:
        raise ScenarioError(
            f"{args.trace}: no scenario path embedded in the trace; pass --scenario"
        )
    scenario = load_scenario(scenario_path)
    render_svg(scenario, outcome, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "plot":
            return _cmd_plot(args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
