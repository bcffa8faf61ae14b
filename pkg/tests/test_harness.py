import csv
import json
import math
import statistics

import pytest

from ctxplan.harness import (
    BatchReport,
    ScenarioError,
    builtin_scenario_path,
    load_scenario,
    read_episode_trace,
    run_batch,
    scenario_from_dict,
    write_episode_trace,
    write_executed_csv,
    write_planning_csv,
    write_summary_csv,
    write_trials_csv,
)


def minimal_scenario_dict(**overrides):
    data = {
        "schema_version": 1,
        "name": "minimal",
        "world": {
            "start": [0.1, 0.1],
            "goal": {"min": [0.75, 0.75], "max": [0.9, 0.9]},
            "obstacles": [],
            "drift": {"default": 0.0, "regions": []},
        },
    }
    data.update(overrides)
    return data


def fast_zero_drift_scenario():
    from dataclasses import replace

    sc = load_scenario(builtin_scenario_path("zero_drift"))
    return replace(
        sc, planner=replace(sc.planner, max_iterations=500, runs_per_planning=2)
    )


class TestScenarioLoading:
    def test_builtin_scenario_a(self):
        sc = load_scenario(builtin_scenario_path("scenario_a"))
        assert sc.name == "scenario-a"
        assert sc.drift_levels() == [0.006, 0.012, 0.018, 0.024]
        assert sc.execution.safety_threshold == 0.05
        assert sc.penalty == 10.0
        assert (sc.grid.width, sc.grid.height, sc.grid.resolution) == (5, 5, 0.05)
        assert sc.metadata.get("source") == "reconstruction"

    def test_builtin_scenario_b(self):
        sc = load_scenario(builtin_scenario_path("scenario_b"))
        assert len(sc.world.obstacles) == 3
        assert sc.metadata.get("source") == "reconstruction"

    def test_unknown_builtin(self):
        with pytest.raises(ScenarioError, match="available"):
            builtin_scenario_path("scenario_z")

    def test_defaults_fill_omitted_constants(self):
        sc = scenario_from_dict(minimal_scenario_dict())
        assert sc.execution.safety_threshold == 0.05
        assert sc.penalty == 10.0
        assert sc.grid.size == 25
        assert sc.anomaly.confidence == 0.95
        assert sc.planner.variant == "ctx-rrt"

    def test_goal_inside_obstacle_reported(self):
        data = minimal_scenario_dict()
        data["world"]["obstacles"] = [{"min": [0.7, 0.7], "max": [0.95, 0.95]}]
        with pytest.raises(ScenarioError, match="obstacle"):
            scenario_from_dict(data)

    def test_overlapping_drift_regions_reported(self):
        data = minimal_scenario_dict()
        data["world"]["drift"] = {
            "default": 0.0,
            "regions": [
                {"min": [0.0, 0.0], "max": [0.5, 0.5], "delta": 0.01},
                {"min": [0.4, 0.4], "max": [0.6, 0.6], "delta": 0.02},
            ],
        }
        with pytest.raises(ScenarioError, match="overlap"):
            scenario_from_dict(data)

    def test_start_inside_obstacle_reported(self):
        data = minimal_scenario_dict()
        data["world"]["obstacles"] = [{"min": [0.0, 0.0], "max": [0.2, 0.2]}]
        with pytest.raises(ScenarioError, match="start"):
            scenario_from_dict(data)

    def test_parse_error_carries_line_info(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n  "schema_version": 1,\n  "name": oops\n}\n')
        with pytest.raises(ScenarioError, match=r"bad\.json:3:"):
            load_scenario(bad)

    def test_wrong_schema_version(self):
        with pytest.raises(ScenarioError, match="schema_version"):
            scenario_from_dict(minimal_scenario_dict(schema_version=99))

    def test_missing_start(self):
        data = minimal_scenario_dict()
        del data["world"]["start"]
        with pytest.raises(ScenarioError, match="start"):
            scenario_from_dict(data)


class TestRunBatch:
    def test_bookkeeping(self):
        sc = fast_zero_drift_scenario()
        report = run_batch(sc, variants=["mab-rrt", "ctx-rrt"], trials=3, base_seed=5)
        assert len(report.rows) == 6
        assert [r.seed for r in report.rows[:3]] == [5, 6, 7]
        assert {r.variant for r in report.rows} == {"MAB-RRT", "CTX-RRT"}
        assert len(report.summaries()) == 2

    def test_zero_drift_all_variants_succeed_without_replanning(self):
        sc = fast_zero_drift_scenario()
        report = run_batch(sc, trials=3, base_seed=0)
        for s in report.summaries():
            assert s.success_rate == 1.0
            assert s.replannings_mean == 0.0

    def test_identical_seeds_identical_reports(self):
        sc = fast_zero_drift_scenario()
        r1 = run_batch(sc, variants=["ctx-rrt"], trials=3, base_seed=2)
        r2 = run_batch(sc, variants=["ctx-rrt"], trials=3, base_seed=2)
        assert r1.rows == r2.rows

    def test_parallel_matches_serial(self):
        sc = fast_zero_drift_scenario()
        serial = run_batch(sc, variants=["ctx-rrt"], trials=4, base_seed=1, jobs=1)
        parallel = run_batch(sc, variants=["ctx-rrt"], trials=4, base_seed=1, jobs=2)
        assert serial.rows == parallel.rows

    def test_summaries_recomputable_from_rows(self):
        sc = fast_zero_drift_scenario()
        report = run_batch(sc, variants=["ctx-rrt", "mab-rrt"], trials=4, base_seed=3)
        for s in report.summaries():
            rows = [r for r in report.rows if r.variant == s.variant]
            assert s.success_rate == sum(r.success for r in rows) / len(rows)
            repl = [r.replannings for r in rows]
            assert s.replannings_mean == statistics.fmean(repl)
            expected_std = statistics.stdev(repl) if len(repl) > 1 else 0.0
            assert s.replannings_std == expected_std


class TestCsvRoundTrips:
    def test_trials_csv(self, tmp_path):
        sc = fast_zero_drift_scenario()
        report = run_batch(sc, variants=["ctx-rrt"], trials=2, base_seed=0)
        path = tmp_path / "trials.csv"
        write_trials_csv(report, path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert rows[0]["variant"] == "CTX-RRT"
        assert rows[0]["success"] == "1"
        assert float(rows[0]["final_x"]) == report.rows[0].final_x

    def test_summary_csv(self, tmp_path):
        sc = fast_zero_drift_scenario()
        report = run_batch(sc, variants=["ctx-rrt"], trials=2, base_seed=0)
        path = tmp_path / "summary.csv"
        write_summary_csv(report, path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["success_rate"] == "1.0"

    def test_episode_trace_round_trip(self, tmp_path):
        sc = fast_zero_drift_scenario()
        report = run_batch(sc, variants=["ctx-rrt"], trials=1, base_seed=0)
        outcome = report.outcomes[0]
        path = tmp_path / "trace.csv"
        write_episode_trace(outcome, path, scenario_path="zero_drift.json")
        loaded, meta = read_episode_trace(path)
        assert meta["scenario"] == "zero_drift.json"
        assert loaded.variant == outcome.variant
        assert loaded.success == outcome.success
        assert len(loaded.steps) == len(outcome.steps)
        assert [s.x_meas for s in loaded.steps] == [s.x_meas for s in outcome.steps]
        assert [s.safety_stop for s in loaded.steps] == [
            s.safety_stop for s in outcome.steps
        ]
        assert len(loaded.plans) == len(outcome.plans)
        assert loaded.plans[0].planned_states == outcome.plans[0].planned_states

    def test_executed_and_planning_csv(self, tmp_path):
        sc = fast_zero_drift_scenario()
        report = run_batch(sc, variants=["ctx-rrt"], trials=1, base_seed=0)
        outcome = report.outcomes[0]
        executed_path = tmp_path / "executed.csv"
        write_executed_csv(outcome, executed_path)
        with open(executed_path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(outcome.executed)
        assert len(rows[0]["context"].split()) == sc.grid.size + 1

        planning_path = tmp_path / "planning.csv"
        write_planning_csv(outcome, planning_path)
        with open(planning_path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == sum(
            max(1, len(p.incumbent_costs)) if p.failed else len(p.incumbent_costs)
            for p in outcome.plans
        )

    def test_format_table_mentions_all_variants(self):
        sc = fast_zero_drift_scenario()
        report = run_batch(sc, variants=["mab-rrt", "ctx-rrt"], trials=2, base_seed=0)
        table = report.format_table()
        assert "MAB-RRT" in table and "CTX-RRT" in table
        assert "Success rate" in table
