"""End-to-end tests of the command-line interface."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from degradesched import storage
from degradesched.cli import main
from test_lod import constant_model
from test_milp import day_case

runner = CliRunner()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Shared inputs: a tiny dataset, a 24h case file and a model artifact."""
    root = tmp_path_factory.mktemp("cli")
    grid = [
        {"soc_high": 0.8, "dod": 0.5, "temp_amb": 25.0, "c_rate": 1.0},
        {"soc_high": 1.0, "dod": 0.8, "temp_amb": 45.0, "c_rate": 2.0},
    ]
    (root / "grid.json").write_text(json.dumps(grid))
    result = runner.invoke(
        main,
        ["simulate-aging", "--grid", str(root / "grid.json"),
         "--out", str(root / "aging.csv"), "--noise", "0.02", "--seed", "7"],
    )
    assert result.exit_code == 0, result.output
    storage.write_case(root / "case.json", day_case(), series_csv="series.csv")
    storage.write_model_artifact(root / "stub_model.json", constant_model(2e-4))
    return root


class TestSimulateAging:
    def test_writes_rows_and_meta(self, workdir):
        meta = json.loads((workdir / "aging.csv.meta.json").read_text())
        assert meta["noise_sigma"] == 0.02
        assert meta["row_count"] > 400
        assert "manifest" in meta

    def test_deterministic_digest(self, workdir, tmp_path):
        for out in (tmp_path / "a.csv", tmp_path / "b.csv"):
            result = runner.invoke(
                main,
                ["simulate-aging", "--grid", str(workdir / "grid.json"),
                 "--out", str(out), "--noise", "0.02", "--seed", "7"],
            )
            assert result.exit_code == 0, result.output
        assert storage.file_digest(tmp_path / "a.csv") == storage.file_digest(
            tmp_path / "b.csv"
        )
        assert (tmp_path / "a.csv").read_text() == (workdir / "aging.csv").read_text()

    def test_invalid_grid_names_entry(self, tmp_path):
        bad = [{"soc_high": 0.5, "dod": 0.9, "temp_amb": 25.0, "c_rate": 1.0}]
        (tmp_path / "grid.json").write_text(json.dumps(bad))
        result = runner.invoke(
            main,
            ["simulate-aging", "--grid", str(tmp_path / "grid.json"),
             "--out", str(tmp_path / "x.csv")],
        )
        assert result.exit_code == 2
        assert "dod" in result.output

    def test_config_overrides_flags(self, workdir, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"seed": 7}))
        result = runner.invoke(
            main,
            ["simulate-aging", "--grid", str(workdir / "grid.json"),
             "--out", str(tmp_path / "c.csv"), "--noise", "0.02",
             "--seed", "999", "--config", str(cfgfile)],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "c.csv").read_text() == (workdir / "aging.csv").read_text()


class TestTrain:
    def test_named_pair_records_variants(self, workdir, tmp_path):
        out = tmp_path / "model.json"
        result = runner.invoke(
            main,
            ["train", "--dataset", str(workdir / "aging.csv"), "--out", str(out),
             "--ubdf", "5", "--bdp", "10", "--epochs", "8", "--seed", "3"],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads(out.read_text())
        assert (doc["ubdf_variant"], doc["bdp_variant"]) == (5, 10)
        model = storage.read_model_artifact(out)
        x = np.random.default_rng(1).uniform(0.2, 0.8, size=(4, 7))
        again = storage.read_model_artifact(out)
        assert np.array_equal(model.bdp.predict(x), again.bdp.predict(x))

    def test_closure_incompatible_rejected_before_training(self, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["train", "--dataset", str(workdir / "aging.csv"),
             "--out", str(tmp_path / "m.json"), "--ubdf", "1", "--bdp", "10",
             "--epochs", "5"],
        )
        assert result.exit_code == 2
        assert "does not produce" in result.output

    def test_missing_pair_flags_rejected(self, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["train", "--dataset", str(workdir / "aging.csv"),
             "--out", str(tmp_path / "m.json")],
        )
        assert result.exit_code == 2

    def test_benchmarks_write_comparison_table(self, workdir, tmp_path):
        out = tmp_path / "model.json"
        result = runner.invoke(
            main,
            ["train", "--dataset", str(workdir / "aging.csv"), "--out", str(out),
             "--ubdf", "3", "--bdp", "4", "--epochs", "8", "--seed", "3",
             "--with-benchmarks", "--report-dir", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        table = (tmp_path / "performance_comparison.csv").read_text().splitlines()
        assert table[0] == "model_id,tol05,tol10,tol15,tol20"
        assert {line.split(",")[0] for line in table[1:]} == {"hdl-bdq", "nnbd", "nnbd2"}


class TestSchedule:
    def test_traditional_writes_schedule_and_summary(self, workdir, tmp_path):
        out = tmp_path / "trad"
        result = runner.invoke(
            main,
            ["schedule", "--case", str(workdir / "case.json"), "--mode", "traditional",
             "--model", str(workdir / "stub_model.json"), "--out-dir", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert (out / "schedule.csv").exists()
        assert not (out / "trace.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["total_cost"] == pytest.approx(
            summary["operation_cost"] + summary["degradation_cost"]
        )

    def test_lod_writes_trace_with_decreasing_caps(self, workdir, tmp_path):
        out = tmp_path / "lod"
        result = runner.invoke(
            main,
            ["schedule", "--case", str(workdir / "case.json"), "--mode", "lod",
             "--model", str(workdir / "stub_model.json"), "--out-dir", str(out),
             "--alpha", "0.1", "--max-iterations", "5", "--patience", "3"],
        )
        assert result.exit_code == 0, result.output
        rows = storage.read_trace(out / "trace.csv")
        caps = [r["usage_cap_kwh"] for r in rows if r["usage_cap_kwh"] is not None]
        assert all(b < a for a, b in zip(caps, caps[1:]))

    def test_missing_model_is_validation_error(self, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["schedule", "--case", str(workdir / "case.json"), "--mode", "lod",
             "--model", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path / "x")],
        )
        assert result.exit_code == 2

    def test_example_day_case_loads(self, workdir, tmp_path):
        out = tmp_path / "ex"
        result = runner.invoke(
            main,
            ["schedule", "--case", "example-day", "--mode", "traditional",
             "--model", str(workdir / "stub_model.json"), "--out-dir", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert (out / "schedule.csv").exists()


class TestReport:
    def test_merges_three_schedules(self, workdir, tmp_path):
        sched_dirs = {}
        for mode in ("traditional", "linear-bdc"):
            out = tmp_path / mode
            result = runner.invoke(
                main,
                ["schedule", "--case", str(workdir / "case.json"), "--mode", mode,
                 "--model", str(workdir / "stub_model.json"), "--out-dir", str(out)],
            )
            assert result.exit_code == 0, result.output
            sched_dirs[mode] = out / "schedule.csv"
        lod_out = tmp_path / "lod"
        result = runner.invoke(
            main,
            ["schedule", "--case", str(workdir / "case.json"), "--mode", "lod",
             "--model", str(workdir / "stub_model.json"), "--out-dir", str(lod_out),
             "--alpha", "0.1", "--max-iterations", "4", "--patience", "3"],
        )
        assert result.exit_code == 0, result.output

        report_out = tmp_path / "report"
        result = runner.invoke(
            main,
            ["report", "--traditional", str(sched_dirs["traditional"]),
             "--linear", str(sched_dirs["linear-bdc"]),
             "--lod", str(lod_out / "schedule.csv"),
             "--trace", str(lod_out / "trace.csv"), "--out-dir", str(report_out)],
        )
        assert result.exit_code == 0, result.output
        cmp_lines = (report_out / "bess_comparison.csv").read_text().splitlines()
        assert len(cmp_lines) == 25
        series = (report_out / "cost_vs_iteration.csv").read_text().splitlines()
        assert series[0] == "iteration,operation_cost,degradation_cost,total_cost"

    def test_missing_input_named(self, tmp_path):
        result = runner.invoke(
            main,
            ["report", "--traditional", str(tmp_path / "a.csv"),
             "--linear", str(tmp_path / "b.csv"), "--lod", str(tmp_path / "c.csv"),
             "--out-dir", str(tmp_path / "out")],
        )
        assert result.exit_code == 2
        assert "a.csv" in result.output
