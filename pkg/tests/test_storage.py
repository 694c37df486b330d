"""Tests for file formats and persistence."""

import json

import numpy as np
import pytest

from degradesched import aging, storage
from degradesched.milp import build_model, solve
from degradesched.storage import FileFormatError
from test_lod import arbitrage_case, constant_model
from test_milp import day_case


@pytest.fixture(scope="module")
def small_dataset():
    return aging.generate_dataset(aging.default_grid(n_groups=2), noise_sigma=0.01, seed=4)


class TestDatasetFiles:
    def test_round_trip(self, tmp_path, small_dataset):
        path = storage.write_dataset(tmp_path / "aging.csv", small_dataset)
        back = storage.read_dataset(path)
        assert np.array_equal(back.to_array(), small_dataset.to_array())
        assert back.meta["row_count"] == len(small_dataset)

    def test_meta_sidecar(self, tmp_path, small_dataset):
        storage.write_dataset(tmp_path / "aging.csv", small_dataset, manifest="m.json")
        meta = json.loads((tmp_path / "aging.csv.meta.json").read_text())
        assert meta["noise_sigma"] == 0.01
        assert meta["seed"] == 4
        assert meta["manifest"] == "m.json"

    def test_header_is_pinned(self, tmp_path, small_dataset):
        path = storage.write_dataset(tmp_path / "aging.csv", small_dataset)
        first = path.read_text().splitlines()[0]
        assert first == "soc,dod,temp,c_rate,soh,it,ir,elcn,degradation"

    def test_wrong_column_count_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("soc,dod,temp,c_rate,soh,it,ir,elcn,degradation\n1,2,3\n")
        with pytest.raises(FileFormatError, match="columns"):
            storage.read_dataset(p)

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(
            "soc,dod,temp,c_rate,soh,it,ir,elcn,degradation\n"
            "0.8,0.5,25.0,1.0,1.0,32.0,50.0,nan,2e-4\n"
        )
        with pytest.raises(FileFormatError, match="non-finite"):
            storage.read_dataset(p)

    def test_wrong_header_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(FileFormatError, match="header"):
            storage.read_dataset(p)


class TestModelArtifacts:
    def test_round_trip_bit_identical_predictions(self, tmp_path):
        model = constant_model(2e-4)
        path = storage.write_model_artifact(tmp_path / "model.json", model)
        back = storage.read_model_artifact(path)
        x = np.random.default_rng(0).uniform(0, 1, size=(6, 7))
        assert np.array_equal(back.bdp.predict(x), model.bdp.predict(x))
        assert (back.ubdf_id, back.bdp_id) == (model.ubdf_id, model.bdp_id)

    def test_checksum_mismatch_rejected(self, tmp_path):
        model = constant_model(2e-4)
        path = storage.write_model_artifact(tmp_path / "model.json", model)
        doc = json.loads(path.read_text())
        doc["closure_checksum"] = "sha256:0000"
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError, match="checksum"):
            storage.read_model_artifact(path)

    def test_shape_mismatch_rejected(self, tmp_path):
        model = constant_model(2e-4)
        path = storage.write_model_artifact(tmp_path / "model.json", model)
        doc = json.loads(path.read_text())
        doc["bdp"]["biases"][-1] = [0.0, 0.0]
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError):
            storage.read_model_artifact(path)


class TestCaseFiles:
    def day24(self):
        return day_case()

    def test_inline_round_trip(self, tmp_path):
        case = self.day24()
        path = storage.write_case(tmp_path / "case.json", case)
        back = storage.read_case(path)
        assert back.horizon == 24
        assert np.allclose(back.load, case.load)
        assert back.generators == case.generators
        assert back.bess == case.bess

    def test_csv_series_round_trip(self, tmp_path):
        case = self.day24()
        path = storage.write_case(tmp_path / "case.json", case, series_csv="series.csv")
        back = storage.read_case(path)
        assert np.allclose(back.price_buy, case.price_buy)
        header = (tmp_path / "series.csv").read_text().splitlines()[0]
        assert header == "hour,load_kw,wind_kw,solar_kw,buy_price,sell_price,temp_c"

    def test_wrong_horizon_rejected(self, tmp_path):
        case = arbitrage_case()  # 6 intervals
        path = storage.write_case(tmp_path / "case.json", case)
        with pytest.raises(FileFormatError, match="24"):
            storage.read_case(path)

    def test_sell_above_buy_rejected(self, tmp_path):
        case = self.day24()
        path = storage.write_case(tmp_path / "case.json", case)
        doc = json.loads(path.read_text())
        doc["series"]["sell_price"][3] = doc["series"]["buy_price"][3] + 1.0
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError, match="sell price"):
            storage.read_case(path)


class TestScheduleAndTraceFiles:
    def test_schedule_round_trip(self, tmp_path):
        case = day_case()
        sched = solve(build_model(case))
        path = storage.write_schedule(tmp_path / "schedule.csv", sched, case)
        back = storage.read_schedule(path)
        assert np.allclose(back["p_char"], sched.p_char[0])
        assert np.allclose(back["energy_kwh"], sched.energy[0])
        assert back["hour"].tolist() == list(range(24))

    def test_trace_round_trip_with_empty_cap(self, tmp_path):
        from degradesched.lod import EconParams, LodConfig, run_lod

        case = arbitrage_case()
        trace = run_lod(
            case, constant_model(5e-4), EconParams(capital_cost=120_000.0),
            LodConfig(alpha=0.1, max_iterations=4, patience=10),
        )
        path = storage.write_trace(tmp_path / "trace.csv", trace)
        rows = storage.read_trace(path)
        assert rows[0]["usage_cap_kwh"] is None
        assert rows[1]["usage_cap_kwh"] == pytest.approx(
            trace.iterations[1].usage_cap_kwh
        )
        assert [r["iteration"] for r in rows] == list(range(len(trace.iterations)))

    def test_comparison_requires_matching_horizons(self, tmp_path):
        case = day_case()
        sched = solve(build_model(case))
        path = storage.write_schedule(tmp_path / "s.csv", sched, case)
        full = storage.read_schedule(path)
        short = {k: v[:12] for k, v in full.items()}
        with pytest.raises(FileFormatError, match="horizon"):
            storage.write_bess_comparison(tmp_path / "cmp.csv", full, full, short)

    def test_comparison_sign_convention(self, tmp_path):
        case = day_case()
        sched = solve(build_model(case))
        path = storage.write_schedule(tmp_path / "s.csv", sched, case)
        data = storage.read_schedule(path)
        out = storage.write_bess_comparison(tmp_path / "cmp.csv", data, data, data)
        lines = out.read_text().splitlines()
        assert lines[0] == "hour,p_bess_traditional,p_bess_linear,p_bess_lod"
        charging_hours = np.flatnonzero(sched.p_char[0] > 1e-6)
        assert charging_hours.size > 0
        t = int(charging_hours[0])
        value = float(lines[1 + t].split(",")[1])
        assert value == pytest.approx(-(sched.p_char[0, t] - sched.p_disc[0, t]))
        assert value < 0


class TestManifest:
    def test_manifest_fields(self, tmp_path):
        src = tmp_path / "input.txt"
        src.write_text("hello")
        path = storage.write_manifest(
            tmp_path / "manifest.json",
            command="train",
            config={"epochs": 3},
            inputs=[src],
            seed=7,
            timings={"wall_seconds": 1.5},
        )
        doc = json.loads(path.read_text())
        assert doc["command"] == "train"
        assert doc["seed"] == 7
        assert doc["input_digests"][str(src)].startswith("sha256:")
        assert doc["tool_version"]
