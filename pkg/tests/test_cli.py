"""Exit codes and file outputs of the console entry point."""

import csv

import pytest
from click.testing import CliRunner

from fliqc.cli import EXIT_PLANNING, EXIT_VALIDATION, bench_backends, main
from fliqc.scenario import scenario_from_dict, scenario_to_dict
from fliqc.simharness import load_scenario, load_trace, save_scenario


@pytest.fixture()
def runner():
    return CliRunner()


def test_run_fixture_exits_zero(runner, tmp_path):
    trace = tmp_path / "trace.csv"
    result = runner.invoke(main, ["run", "planar_2r_example", "--trace", str(trace)])
    assert result.exit_code == 0, result.output
    assert "outcome=ReachedGoal" in result.output
    rows = load_trace(trace)
    assert len(rows) >= 2


def test_run_json_trace(runner, tmp_path):
    trace = tmp_path / "trace.json"
    result = runner.invoke(
        main, ["run", "planar_2r_example", "--trace", str(trace), "--format", "json"]
    )
    assert result.exit_code == 0
    assert load_trace(trace)


def test_run_unknown_scenario_is_validation_error(runner, tmp_path):
    result = runner.invoke(main, ["run", str(tmp_path / "nope.json")])
    assert result.exit_code == EXIT_VALIDATION
    assert "scenario error" in result.stderr


def test_run_planning_failure_exit_code(runner, tmp_path):
    doc = scenario_to_dict(load_scenario("planar_2r_example"))
    doc["robot_model"]["qdot_min"] = [-1e-7, -1e-7]
    doc["robot_model"]["qdot_max"] = [1e-7, 1e-7]
    doc["planner"]["max_iters"] = 20
    path = tmp_path / "clamped.json"
    save_scenario(scenario_from_dict(doc, name="clamped"), path)
    result = runner.invoke(main, ["run", str(path)])
    assert result.exit_code == EXIT_PLANNING
    assert "outcome=" in result.output


def test_batch_writes_metrics_csv(runner, tmp_path):
    out = tmp_path / "metrics.csv"
    result = runner.invoke(
        main,
        ["batch", "planar_2r_free", "--runs", "2", "--seed", "5", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert "success_rate=" in result.output
    with out.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert rows[0]["scenario_id"] == "planar_2r_free#0"
    assert rows[0]["success"] == "True"


def test_batch_rejects_bad_runs(runner):
    result = runner.invoke(main, ["batch", "planar_2r_example", "--runs", "0"])
    assert result.exit_code != 0


def test_serve_validates_before_binding(runner, tmp_path):
    result = runner.invoke(main, ["serve", str(tmp_path / "missing.json"), "--port", "1"])
    assert result.exit_code == EXIT_VALIDATION


def test_bench_reports_each_backend():
    rows = bench_backends(iters=2)
    kernels = {r["kernel"] for r in rows}
    assert kernels == {"qp_solve", "segment_sphere_batch"}
    assert any(r["backend"] == "pure" for r in rows)
    pure_rows = [r for r in rows if r["backend"] == "pure"]
    assert all(r["speedup"] == pytest.approx(1.0) for r in pure_rows)
    assert all(r["median_us"] > 0 for r in rows)
