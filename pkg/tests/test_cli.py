import json
import xml.etree.ElementTree as ET

import pytest

from ctxplan.cli import main
from ctxplan.harness import builtin_scenario_path


def fast_scenario_file(tmp_path, name="zero_drift"):
    data = json.loads(builtin_scenario_path(name).read_text())
    data["planner"]["max_iterations"] = 500
    data["planner"]["runs_per_planning"] = 2
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(data))
    return path


def test_validate_ok(tmp_path, capsys):
    path = fast_scenario_file(tmp_path)
    assert main(["validate", "--scenario", str(path)]) == 0
    out = capsys.readouterr().out
    assert "ok" in out


def test_validate_bad_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1}')
    assert main(["validate", "--scenario", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_run_writes_reports(tmp_path, capsys):
    scenario = fast_scenario_file(tmp_path)
    out_dir = tmp_path / "results"
    code = main(
        [
            "run",
            "--scenario", str(scenario),
            "--variant", "ctx-rrt",
            "--trials", "2",
            "--seed", "0",
            "--out", str(out_dir),
        ]
    )
    assert code == 0
    assert (out_dir / "trials.csv").exists()
    assert (out_dir / "summary.csv").exists()
    assert "CTX-RRT" in (out_dir / "summary.txt").read_text()


def test_run_unknown_variant(tmp_path, capsys):
    scenario = fast_scenario_file(tmp_path)
    assert main(["run", "--scenario", str(scenario), "--variant", "sst"]) == 1


def test_run_dump_traces_and_plot(tmp_path):
    scenario = fast_scenario_file(tmp_path)
    out_dir = tmp_path / "results"
    code = main(
        [
            "run",
            "--scenario", str(scenario),
            "--variant", "ctx-rrt",
            "--trials", "1",
            "--out", str(out_dir),
            "--dump-traces",
        ]
    )
    assert code == 0
    traces = sorted((out_dir / "traces").glob("*.csv"))
    assert traces
    trace = out_dir / "traces" / "ctx-rrt_trial000.csv"
    assert trace.exists()
    svg_out = tmp_path / "episode.svg"
    assert main(["plot", "--trace", str(trace), "--out", str(svg_out)]) == 0
    root = ET.parse(svg_out).getroot()
    assert root.tag.endswith("svg")


def test_out_dir_env_override(tmp_path, monkeypatch, capsys):
    scenario = fast_scenario_file(tmp_path)
    target = tmp_path / "env_out"
    monkeypatch.setenv("CTXPLAN_OUT_DIR", str(target))
    monkeypatch.chdir(tmp_path)
    code = main(
        ["run", "--scenario", str(scenario), "--variant", "ctx-rrt", "--trials", "1"]
    )
    assert code == 0
    assert (target / "trials.csv").exists()
