"""End-to-end tests of the analysis pipeline on synthetic series."""

import datetime
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from tbeamon.changepoint import calibrate_thresholds
from tbeamon.errors import ConfigurationError, DataError
from tbeamon.pipeline import PipelineConfig, run_pipeline
from tbeamon.series import IndexSeries, extract_events

MU0, SIGMA0 = 0.2082, 0.9213
WINDOW = (datetime.date(1980, 1, 1), datetime.date(2004, 12, 1))


@pytest.fixture(scope="module")
def series_shift():
    # 25 baseline years, then the level drops by 1.2 spreads for 25 more
    rng = np.random.default_rng(42)
    base = MU0 + SIGMA0 * rng.standard_normal(300)
    worse = MU0 - 1.2 * SIGMA0 + SIGMA0 * rng.standard_normal(300)
    return IndexSeries(datetime.date(1980, 1, 1), np.concatenate([base, worse]))


@pytest.fixture(scope="module")
def series_blocks():
    # severe and calm stretches alternate after the baseline window, so
    # the EWMA chart falls back under its limit and climbs again
    rng = np.random.default_rng(42)
    parts = [MU0 + SIGMA0 * rng.standard_normal(300)]
    for i in range(5):
        if i % 2 == 0:
            parts.append(MU0 - 1.6 * SIGMA0 + SIGMA0 * rng.standard_normal(60))
        else:
            parts.append(MU0 + SIGMA0 * rng.standard_normal(150))
    return IndexSeries(datetime.date(1980, 1, 1), np.concatenate(parts))


class TestPipelineConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert cfg.detectors == ("ewma", "ks", "mw")
        assert cfg.threshold == -1.0
        assert (cfg.alpha, cfg.burn_in) == (0.0027, 20)

    def test_duplicate_detectors_deduped(self):
        cfg = PipelineConfig(detectors=("mw", "ewma", "mw"))
        assert cfg.detectors == ("mw", "ewma")

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"detectors": ()},
            {"detectors": ("cusum",)},
            {"threshold": 0.0},
            {"restart": "fresh"},
            {"turning_tol": 0.0},
            {"burn_in": 0},
            {"eca_delta_t_max": -1},
            {"eca_tau": -1},
            {"eca_replications": 500},
            {"lam": 0.0},
        ],
    )
    def test_invalid_settings(self, kwargs):
        with pytest.raises(ConfigurationError):
            PipelineConfig(**kwargs)


class TestRunPipeline:
    def test_shift_series_structure(self, series_shift):
        res = run_pipeline(series_shift, WINDOW, PipelineConfig(seed=7))
        assert len(res.monitored_months) == res.monitored_z.size
        assert set(res.runs) == {"ks", "mw"}
        assert res.n_observations == 600
        assert res.series_start == datetime.date(1980, 1, 1)
        assert res.estimates.window_end == WINDOW[1]
        for d in res.detections:
            assert d.detection_date == res.monitored_months[d.detection_index - 1]
            assert d.tau_date == res.monitored_months[d.tau_hat - 1]

    def test_shift_series_finds_the_break(self, series_shift):
        res = run_pipeline(series_shift, WINDOW, PipelineConfig(seed=7))
        for det in ("ks", "mw"):
            dets = res.runs[det].detections
            assert dets
            # the first estimated change sits by the window seam
            assert res.monitored_months[dets[0].tau_hat - 1].year in (2004, 2005)

    def test_segments_partition_the_stream(self, series_shift):
        res = run_pipeline(series_shift, WINDOW, PipelineConfig(seed=7))
        n = res.monitored_z.size
        for det, segs in res.segments.items():
            assert segs[0][0][0] == 1
            assert segs[-1][0][1] == n
            for (lo, hi), mean in segs:
                assert lo <= hi
                assert mean == pytest.approx(res.monitored_z[lo - 1 : hi].mean())
            for ((_, hi), _), ((lo2, _), _) in zip(segs, segs[1:]):
                assert lo2 == hi + 1

    def test_ewma_starts_after_window(self, series_shift):
        res = run_pipeline(series_shift, WINDOW, PipelineConfig(seed=7))
        assert res.ewma is not None
        assert all(m > WINDOW[1] for m in res.ewma.months)
        # a sustained deterioration keeps the chart signalling
        assert len(res.ewma.signals) > 50

    def test_no_turning_months_no_eca(self, series_shift):
        res = run_pipeline(series_shift, WINDOW, PipelineConfig(seed=7))
        assert res.ewma.turning_months == ()
        assert res.eca == ()
        assert res.eca_delta_ts == ()

    def test_blocks_series_fills_eca_table(self, series_blocks):
        cfg = PipelineConfig(seed=7, eca_replications=2_000)
        res = run_pipeline(series_blocks, WINDOW, cfg)
        assert len(res.ewma.turning_months) >= 1
        assert res.eca_delta_ts == (0, 1, 2, 3, 4, 5)
        assert len(res.eca) == 6
        for row in res.eca:
            assert 0.0 <= row.rp <= 1.0
            assert 0.0 < row.p_value <= 1.0

    def test_cpm_only_run(self, series_shift):
        cfg = PipelineConfig(detectors=("ks", "mw"), seed=7)
        res = run_pipeline(series_shift, WINDOW, cfg)
        assert res.ewma is None
        assert res.eca == ()
        assert set(res.runs) == {"ks", "mw"}

    def test_ewma_only_run(self, series_shift):
        cfg = PipelineConfig(detectors=("ewma",), seed=7)
        res = run_pipeline(series_shift, WINDOW, cfg)
        assert res.runs == {}
        assert res.detections == ()
        assert res.segments == {}
        assert res.ewma is not None

    def test_custom_tables_take_precedence(self, series_shift):
        tables = {
            "mw": calibrate_thresholds(
                "mw", alpha=0.02, burn_in=10, n_max=80,
                replications=2_000, random_state=1,
            ),
            "ks": calibrate_thresholds(
                "ks", alpha=0.02, burn_in=10, n_max=80,
                replications=2_000, moments_replications=600, random_state=1,
            ),
        }
        cfg = PipelineConfig(alpha=0.02, burn_in=10, seed=7)
        res = run_pipeline(series_shift, WINDOW, cfg, tables=tables)
        assert set(res.runs) == {"ks", "mw"}
        for det in ("ks", "mw"):
            assert res.runs[det].detections

    def test_mismatched_tables_rejected(self, series_shift):
        tables = {
            "mw": calibrate_thresholds(
                "mw", alpha=0.02, burn_in=10, n_max=80,
                replications=2_000, random_state=1,
            ),
        }
        with pytest.raises(ConfigurationError):
            run_pipeline(series_shift, WINDOW, PipelineConfig(detectors=("mw",), seed=7), tables=tables)

    def test_sparse_baseline_rejected(self):
        # two events in the window cannot support the baselines
        values = np.full(360, 1.0)
        values[10] = -2.0
        values[40] = -2.5
        values[320] = -3.0
        series = IndexSeries(datetime.date(1980, 1, 1), values)
        with pytest.raises(DataError):
            run_pipeline(series, (datetime.date(1980, 1, 1), datetime.date(1989, 12, 1)))

    def test_quiet_tail_rejected_for_ewma(self, series_shift):
        # nothing crosses the threshold after the window: the chart has
        # no stream to monitor
        rng = np.random.default_rng(1)
        values = np.concatenate([
            MU0 + SIGMA0 * rng.standard_normal(300),
            np.full(60, 1.0),
        ])
        series = IndexSeries(datetime.date(1980, 1, 1), values)
        with pytest.raises(DataError):
            run_pipeline(series, WINDOW, PipelineConfig(seed=7))


class TestWrite:
    def _run(self, series, tmp_path, name, cfg=None):
        res = run_pipeline(series, WINDOW, cfg or PipelineConfig(seed=7))
        out = tmp_path / name
        manifest = res.write(out)
        return res, out, manifest

    def test_files_match_manifest(self, series_shift, tmp_path):
        _, out, manifest = self._run(series_shift, tmp_path, "run")
        names = [e["name"] for e in manifest["files"]]
        assert names == sorted(names)
        assert set(names) == {
            "detections.json", "eca.csv", "events.json",
            "ewma.csv", "phase1.json", "segments.csv",
        }
        for entry in manifest["files"]:
            payload = (out / entry["name"]).read_bytes()
            assert len(payload) == entry["bytes"]
            assert hashlib.sha256(payload).hexdigest() == entry["sha256"]
        on_disk = json.loads((out / "manifest.json").read_text())
        assert on_disk == json.loads(json.dumps(manifest))

    def test_no_ewma_file_without_ewma(self, series_shift, tmp_path):
        cfg = PipelineConfig(detectors=("ks", "mw"), seed=7)
        _, out, manifest = self._run(series_shift, tmp_path, "run", cfg)
        assert not (out / "ewma.csv").exists()
        assert "ewma.csv" not in [e["name"] for e in manifest["files"]]

    def test_repeat_runs_are_byte_identical(self, series_shift, tmp_path):
        _, out_a, man_a = self._run(series_shift, tmp_path, "a")
        _, out_b, man_b = self._run(series_shift, tmp_path, "b")
        assert man_a == man_b
        for entry in man_a["files"]:
            assert (out_a / entry["name"]).read_bytes() == (out_b / entry["name"]).read_bytes()
        assert (out_a / "manifest.json").read_bytes() == (out_b / "manifest.json").read_bytes()

    def test_events_json_matches_extraction(self, series_shift, tmp_path):
        res, out, _ = self._run(series_shift, tmp_path, "run")
        rows = json.loads((out / "events.json").read_text())
        assert len(rows) == len(extract_events(series_shift, -1.0))
        assert rows[0]["gap_months"] is None
        assert all(r["amplitude"] > 0 for r in rows)

    def test_detections_json_round_trip(self, series_shift, tmp_path):
        res, out, _ = self._run(series_shift, tmp_path, "run")
        rows = json.loads((out / "detections.json").read_text())
        assert len(rows) == len(res.detections)
        for row, d in zip(rows, res.detections):
            assert row["detector"] == d.detector
            assert row["tau_hat"] == d.tau_hat
            assert row["detection_date"] == d.detection_date.strftime("%Y-%m")

    def test_segments_csv_layout(self, series_shift, tmp_path):
        res, out, _ = self._run(series_shift, tmp_path, "run")
        lines = (out / "segments.csv").read_text().splitlines()
        assert lines[0] == "detector,start_index,end_index,start_date,end_date,mean_z"
        body = [ln.split(",") for ln in lines[1:]]
        assert {row[0] for row in body} == {"ks", "mw"}
        n_segments = sum(len(s) for s in res.segments.values())
        assert len(body) == n_segments

    def test_ewma_csv_layout(self, series_shift, tmp_path):
        res, out, _ = self._run(series_shift, tmp_path, "run")
        lines = (out / "ewma.csv").read_text().splitlines()
        assert lines[0] == "event_date,z_star,ucl,signal"
        assert len(lines) - 1 == len(res.ewma.months)
        signals = sum(int(ln.split(",")[3]) for ln in lines[1:])
        assert signals == len(res.ewma.signals)

    def test_eca_csv_has_rows_when_coincidence_ran(self, series_blocks, tmp_path):
        cfg = PipelineConfig(seed=7, eca_replications=2_000)
        _, out, _ = self._run(series_blocks, tmp_path, "run", cfg)
        lines = (out / "eca.csv").read_text().splitlines()
        assert lines[0] == "delta_t,rp,p_value"
        assert len(lines) == 7
        assert [int(ln.split(",")[0]) for ln in lines[1:]] == [0, 1, 2, 3, 4, 5]
