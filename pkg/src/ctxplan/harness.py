"""Experiment harness: scenario files, batch trials, statistics, CSV output.

Scenarios are versioned JSON documents that fully determine a world, the
context grid, and all tuning constants; two reconstructed scenarios plus a
zero-drift sanity world ship with the package. Batches run a trial matrix of
(variant, trial) episodes with per-trial seeds, optionally across a process
pool, and aggregate success rates and replanning statistics per variant.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .context import GridSpec
from .deviation import AnomalyConfig
from .executor import EpisodeOutcome, ExecutionConfig, run_episode
from .planner import VARIANT_ORDER, PlannerConfig, get_variant
from .world import DriftRegion, Point, Rect, World

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate."""


@dataclass(frozen=True)
class Scenario:
    """Everything needed to run episodes: world, grid, and tuning constants."""

    name: str
    world: World
    start: Point
    grid: GridSpec
    planner: PlannerConfig
    anomaly: AnomalyConfig
    execution: ExecutionConfig
    penalty: float
    metadata: dict = field(default_factory=dict)

    def drift_levels(self) -> list[float]:
        """Distinct drift magnitudes present in the world, ascending."""
        levels = {self.world.default_drift}
        levels.update(r.delta for r in self.world.drift_regions)
        return sorted(levels)


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ScenarioError(f"{where}: missing required field '{key}'")
    return data[key]


def _rect(data, where: str) -> Rect:
    if not isinstance(data, dict) or "min" not in data or "max" not in data:
        raise ScenarioError(f"{where}: expected an object with 'min' and 'max' corners")
    lo, hi = data["min"], data["max"]
    if len(lo) != 2 or len(hi) != 2:
        raise ScenarioError(f"{where}: corners must be [x, y] pairs")
    try:
        return Rect(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def scenario_from_dict(data: dict, source: str = "<dict>") -> Scenario:
    """Build and validate a scenario from parsed JSON data."""
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"{source}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"
        )
    name = data.get("name", Path(source).stem)
    wdata = _require(data, "world", source)
    where = f"{source}: world"

    bounds = _rect(wdata.get("bounds", {"min": [0.0, 0.0], "max": [1.0, 1.0]}), f"{where}.bounds")
    goal = _rect(_require(wdata, "goal", where), f"{where}.goal")
    obstacles = [
        _rect(o, f"{where}.obstacles[{i}]") for i, o in enumerate(wdata.get("obstacles", []))
    ]
    ddata = wdata.get("drift", {})
    regions = []
    for i, r in enumerate(ddata.get("regions", [])):
        rect = _rect(r, f"{where}.drift.regions[{i}]")
        if "delta" not in r:
            raise ScenarioError(f"{where}.drift.regions[{i}]: missing 'delta'")
        try:
            regions.append(DriftRegion(rect, float(r["delta"])))
        except ValueError as exc:
            raise ScenarioError(f"{where}.drift.regions[{i}]: {exc}") from exc

    start_raw = _require(wdata, "start", where)
    if len(start_raw) != 2:
        raise ScenarioError(f"{where}.start: expected an [x, y] pair")
    start = (float(start_raw[0]), float(start_raw[1]))

    try:
        world = World(
            bounds=bounds,
            obstacles=obstacles,
            goal=goal,
            drift_regions=regions,
            default_drift=float(ddata.get("default", 0.0)),
            control_duration=float(wdata.get("control_duration", 0.1)),
            control_bound=float(wdata.get("control_bound", 0.5)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc

    if not world.in_bounds(start):
        raise ScenarioError(f"{where}.start: {start} is outside the world bounds")
    if world.state_in_obstacle(start):
        raise ScenarioError(f"{where}.start: {start} is inside an obstacle")

    gdata = data.get("context_grid", {})
    try:
        grid = GridSpec(
            width=int(gdata.get("width", 5)),
            height=int(gdata.get("height", 5)),
            resolution=float(gdata.get("resolution", 0.05)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{source}: context_grid: {exc}") from exc

    adata = data.get("anomaly", {})
    try:
        anomaly = AnomalyConfig(
            confidence=float(adata.get("confidence", 0.95)),
            threshold_mode=str(adata.get("threshold_mode", "quantile")),
            min_samples=int(adata.get("min_samples", 3)),
            min_std=float(adata.get("min_std", 1e-9)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{source}: anomaly: {exc}") from exc

    edata = data.get("execution", {})
    try:
        execution = ExecutionConfig(
            safety_threshold=float(
                edata.get("safety_threshold", data.get("safety_threshold", 0.05))
            ),
            max_replannings=int(edata.get("max_replannings", 10)),
            count_failed_plans=bool(edata.get("count_failed_plans", True)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{source}: execution: {exc}") from exc

    pdata = data.get("planner", {})
    try:
        planner = PlannerConfig(
            variant=str(pdata.get("variant", "ctx-rrt")),
            max_iterations=int(pdata.get("max_iterations", 2000)),
            runs_per_planning=int(pdata.get("runs_per_planning", 4)),
            goal_bias=float(pdata.get("goal_bias", 0.05)),
            controls_per_extension=int(pdata.get("controls_per_extension", 10)),
            cluster_threshold=float(pdata.get("cluster_threshold", 0.1)),
            cluster_sample_size=int(pdata.get("cluster_sample_size", 300)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{source}: planner: {exc}") from exc

    penalty = float(data.get("cost_penalty", 10.0))
    if penalty <= 0.0:
        raise ScenarioError(f"{source}: cost_penalty must be > 0, got {penalty}")

    return Scenario(
        name=str(name),
        world=world,
        start=start,
        grid=grid,
        planner=planner,
        anomaly=anomaly,
        execution=execution,
        penalty=penalty,
        metadata=dict(data.get("metadata", {})),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file, with parse errors reported by line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario document must be a JSON object")
    return scenario_from_dict(data, source=str(path))


def builtin_scenario_path(name: str) -> Path:
    """Filesystem path of a scenario shipped with the package."""
    candidate = resources.files("ctxplan.scenarios").joinpath(f"{name}.json")
    with resources.as_file(candidate) as p:
        if not p.exists():
            available = sorted(
                f.name[: -len(".json")]
                for f in resources.files("ctxplan.scenarios").iterdir()
                if f.name.endswith(".json")
            )
            raise ScenarioError(f"no builtin scenario {name!r}; available: {available}")
        return Path(p)


# -- batch running ----------------------------------------------------------


@dataclass(frozen=True)
class TrialRow:
    """Flat per-episode record, the unit of the batch CSV."""

    scenario: str
    variant: str
    trial: int
    seed: int
    success: bool
    replannings: int
    steps: int
    safety_stops: int
    planning_failures: int
    final_x: float
    final_y: float


@dataclass(frozen=True)
class VariantSummary:
    variant: str
    trials: int
    success_rate: float
    replannings_mean: float
    replannings_std: float


@dataclass
class BatchReport:
    scenario: str
    variants: list[str]
    trials: int
    base_seed: int
    rows: list[TrialRow]
    outcomes: list[EpisodeOutcome] | None
    include_failures_in_stats: bool = True

    def summaries(self) -> list[VariantSummary]:
        """Per-variant statistics; recomputable from ``rows`` alone.

        Replanning statistics include failed episodes (stuck at the budget
        cap) unless ``include_failures_in_stats`` is off. The std.dev. is the
        sample standard deviation (0.0 for fewer than two values).
        """
        out = []
        for variant in self.variants:
            rows = [r for r in self.rows if r.variant == variant]
            if not rows:
                continue
            repl = [
                r.replannings
                for r in rows
                if self.include_failures_in_stats or r.success
            ]
            mean = statistics.fmean(repl) if repl else math.nan
            std = statistics.stdev(repl) if len(repl) > 1 else 0.0
            out.append(
                VariantSummary(
                    variant=variant,
                    trials=len(rows),
                    success_rate=sum(r.success for r in rows) / len(rows),
                    replannings_mean=mean,
                    replannings_std=std,
                )
            )
        return out

    def format_table(self) -> str:
        """Human-readable summary: success rate and replannings mean (std.dev.)."""
        lines = [
            f"scenario: {self.scenario}  (trials per variant: {self.trials}, "
            f"base seed: {self.base_seed})",
            f"{'':24s}  {'Success rate':>12s}  {'N. replannings':>18s}",
            f"{'':24s}  {'mean':>12s}  {'mean (std.dev.)':>18s}",
        ]
        for s in self.summaries():
            repl = f"{s.replannings_mean:.1f} ({s.replannings_std:.2f})"
            lines.append(f"{s.variant:24s}  {s.success_rate:12.2f}  {repl:>18s}")
        return "\n".join(lines)


def _run_trial(args) -> tuple[int, int, EpisodeOutcome]:
    (variant_index, trial, scenario, variant, seed) = args
    outcome = run_episode(
        world=scenario.world,
        start=scenario.start,
        variant=variant,
        seed=seed,
        planner_config=replace(scenario.planner, variant=variant),
        execution_config=scenario.execution,
        anomaly_config=scenario.anomaly,
        grid=scenario.grid,
        penalty=scenario.penalty,
    )
    return variant_index, trial, outcome


def run_batch(
    scenario: Scenario,
    variants: list[str] | None = None,
    trials: int = 30,
    base_seed: int = 0,
    jobs: int = 1,
    keep_outcomes: bool = True,
    include_failures_in_stats: bool = True,
) -> BatchReport:
    """Run ``trials`` episodes per variant; trial i uses seed ``base_seed + i``.

    The same seed is shared across variants for a given trial index, so
    variants are compared on paired random streams. With ``jobs > 1`` episodes
    run in a process pool; results are aggregated in (variant, trial) order,
    so parallel and serial runs produce identical reports.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    variant_keys = [get_variant(v).name for v in (variants or VARIANT_ORDER)]
    raw_variants = list(variants or VARIANT_ORDER)
    tasks = [
        (vi, trial, scenario, raw_variants[vi], base_seed + trial)
        for vi in range(len(raw_variants))
        for trial in range(trials)
    ]
    results: dict[tuple[int, int], EpisodeOutcome] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for vi, trial, outcome in pool.map(_run_trial, tasks, chunksize=1):
                results[(vi, trial)] = outcome
    else:
        for task in tasks:
            vi, trial, outcome = _run_trial(task)
            results[(vi, trial)] = outcome

    rows = []
    outcomes = []
    for vi, name in enumerate(variant_keys):
        for trial in range(trials):
            o = results[(vi, trial)]
            outcomes.append(o)
            rows.append(
                TrialRow(
                    scenario=scenario.name,
                    variant=name,
                    trial=trial,
                    seed=base_seed + trial,
                    success=o.success,
                    replannings=o.replannings,
                    steps=len(o.steps),
                    safety_stops=o.safety_stops,
                    planning_failures=o.planning_failures,
                    final_x=o.final_state[0],
                    final_y=o.final_state[1],
                )
            )
    return BatchReport(
        scenario=scenario.name,
        variants=variant_keys,
        trials=trials,
        base_seed=base_seed,
        rows=rows,
        outcomes=outcomes if keep_outcomes else None,
        include_failures_in_stats=include_failures_in_stats,
    )


# -- CSV output --------------------------------------------------------------

TRIAL_FIELDS = [
    "scenario",
    "variant",
    "trial",
    "seed",
    "success",
    "replannings",
    "steps",
    "safety_stops",
    "planning_failures",
    "final_x",
    "final_y",
]


def write_trials_csv(report: BatchReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_FIELDS)
        for r in report.rows:
            writer.writerow(
                [
                    r.scenario,
                    r.variant,
                    r.trial,
                    r.seed,
                    int(r.success),
                    r.replannings,
                    r.steps,
                    r.safety_stops,
                    r.planning_failures,
                    repr(r.final_x),
                    repr(r.final_y),
                ]
            )


def write_summary_csv(report: BatchReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scenario", "variant", "trials", "success_rate", "replannings_mean", "replannings_std"]
        )
        for s in report.summaries():
            writer.writerow(
                [
                    report.scenario,
                    s.variant,
                    s.trials,
                    repr(s.success_rate),
                    repr(s.replannings_mean),
                    repr(s.replannings_std),
                ]
            )


EPISODE_TRACE_FIELDS = [
    "kind",  # 'meta' | 'plan' | 'step'
    "plan_index",
    "step_index",
    "x",
    "y",
    "x_hat",
    "y_hat",
    "ux",
    "uy",
    "error",
    "mde",
    "deviation",
    "safety_stop",
    "info",
]


def write_episode_trace(
    outcome: EpisodeOutcome, path: str | Path, scenario_path: str | None = None
) -> None:
    """Episode trace CSV: one row per planned rollout point and executed step.

    The leading ``meta`` row records the variant, seed, result, and (when
    known) the scenario file, so ``ctxplan plot`` can redraw the episode from
    the trace alone.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODE_TRACE_FIELDS)
        meta = {
            "variant": outcome.variant,
            "seed": outcome.seed,
            "success": int(outcome.success),
            "replannings": outcome.replannings,
        }
        if scenario_path is not None:
            meta["scenario"] = scenario_path
        writer.writerow(
            ["meta", "", "", "", "", "", "", "", "", "", "", "", "", json.dumps(meta)]
        )
        for p in outcome.plans:
            for i, (px, py) in enumerate(p.planned_states):
                writer.writerow(
                    ["plan", p.index, i, repr(px), repr(py), "", "", "", "", "", "", "", "",
                     "failed" if p.failed else ""]
                )
        for s in outcome.steps:
            writer.writerow(
                [
                    "step",
                    s.plan_index,
                    s.step_index,
                    repr(s.x_meas[0]),
                    repr(s.x_meas[1]),
                    repr(s.x_hat[0]),
                    repr(s.x_hat[1]),
                    repr(s.u[0]),
                    repr(s.u[1]),
                    repr(s.error),
                    repr(s.mde),
                    repr(s.deviation),
                    int(s.safety_stop),
                    "",
                ]
            )


def read_episode_trace(path: str | Path) -> tuple[EpisodeOutcome, dict]:
    """Rebuild a plottable outcome from an episode trace CSV.

    Only the fields needed for rendering are restored (planned rollouts,
    executed states, stop flags); planner diagnostics are not part of the
    trace format. Returns the outcome and the embedded metadata.
    """
    from .executor import PlanTrace, StepRecord

    path = Path(path)
    meta: dict = {}
    plans: dict[int, PlanTrace] = {}
    steps: list[StepRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EPISODE_TRACE_FIELDS:
            raise ScenarioError(f"{path}: not an episode trace file")
        for row in reader:
            kind = row["kind"]
            if kind == "meta":
                meta = json.loads(row["info"])
            elif kind == "plan":
                idx = int(row["plan_index"])
                if idx not in plans:
                    plans[idx] = PlanTrace(
                        index=idx,
                        start=(float(row["x"]), float(row["y"])),
                        controls=[],
                        planned_states=[],
                        cost=math.nan,
                        incumbent_costs=[],
                        arm_pulls=[],
                        failed=row["info"] == "failed",
                    )
                plans[idx].planned_states.append((float(row["x"]), float(row["y"])))
            elif kind == "step":
                steps.append(
                    StepRecord(
                        plan_index=int(row["plan_index"]),
                        step_index=int(row["step_index"]),
                        x=(math.nan, math.nan),
                        u=(float(row["ux"]), float(row["uy"])),
                        x_pred=(math.nan, math.nan),
                        x_meas=(float(row["x"]), float(row["y"])),
                        x_hat=(float(row["x_hat"]), float(row["y_hat"])),
                        error=float(row["error"]),
                        mde=float(row["mde"]),
                        deviation=float(row["deviation"]),
                        safety_stop=bool(int(row["safety_stop"])),
                    )
                )
            else:
                raise ScenarioError(f"{path}: unknown trace row kind {kind!r}")
    outcome = EpisodeOutcome(
        variant=str(meta.get("variant", "?")),
        seed=int(meta.get("seed", -1)),
        success=bool(meta.get("success", False)),
        replannings=int(meta.get("replannings", 0)),
        planning_failures=0,
        safety_stops=sum(s.safety_stop for s in steps),
        final_state=steps[-1].x_meas if steps else (math.nan, math.nan),
        steps=steps,
        plans=[plans[k] for k in sorted(plans)],
    )
    return outcome, meta


def write_executed_csv(outcome: EpisodeOutcome, path: str | Path) -> None:
    """Executed-transition store as CSV for post-hoc analysis."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["x", "y", "ux", "uy", "pred_x", "pred_y", "meas_x", "meas_y",
             "error", "mde", "label", "context"]
        )
        for t in outcome.executed:
            writer.writerow(
                [
                    repr(t.x[0]),
                    repr(t.x[1]),
                    repr(t.u[0]),
                    repr(t.u[1]),
                    repr(t.x_pred[0]),
                    repr(t.x_pred[1]),
                    repr(t.x_meas[0]),
                    repr(t.x_meas[1]),
                    repr(t.error),
                    repr(t.mde),
                    t.label,
                    " ".join(repr(v) for v in t.context),
                ]
            )


def write_planning_csv(outcome: EpisodeOutcome, path: str | Path) -> None:
    """Per-planning trace: incumbent cost after each RRT run and arm pull counts."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["plan_index", "run", "incumbent_cost", "arm_pulls", "failed"])
        for p in outcome.plans:
            if p.failed:
                writer.writerow([p.index, "", "", "", 1])
                continue
            for run, cost in enumerate(p.incumbent_costs):
                pulls = " ".join(str(c) for c in p.arm_pulls[run]) if p.arm_pulls else ""
                writer.writerow(
                    [p.index, run, "inf" if math.isinf(cost) else repr(cost), pulls, 0]
                )
