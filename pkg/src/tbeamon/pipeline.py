"""End-to-end analysis of one monthly index series.

Given a series and a baseline window, this module extracts events,
estimates the gap/amplitude baselines, runs the selected charts over
everything from the window onward, computes per-segment means around
the estimated change points, and checks whether the change-point dates
coincide with the EWMA chart's renewed-climb months. Results go to a
small set of plain JSON/CSV files plus a manifest with content digests,
so a run can be archived and diffed.

The change-point charts monitor the full event stream starting at the
window (the window's events form the warm prefix); the EWMA chart
starts fresh at the first event after the window, the point where its
baselines stop being in-sample.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import date
from pathlib import Path
from typing import Mapping

import numpy as np

from . import __version__
from ._validation import check_choice, check_interval
from .changepoint import (
    MonitorRun,
    ThresholdTable,
    _seed_sequence,
    monitor_run,
    resolve_tables,
    segment_means,
)
from .eca import EcaResult, eca_table
from .errors import ConfigurationError, DataError
from .ewma import EwmaParams, EwmaRunResult, run_chart
from .series import (
    EventRecord,
    IndexSeries,
    SummaryStats,
    describe,
    events_as_dicts,
    extract_events,
    format_month,
    month_index,
)
from .tbea import Phase1Estimates, estimate_phase1, ratio_stream

DETECTOR_CHOICES = ("ewma", "ks", "mw")


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one pipeline run; defaults match the published design."""

    threshold: float = -1.0
    detectors: tuple[str, ...] = DETECTOR_CHOICES
    lam: float = 0.07
    kappa: float = 2.515
    sigma: float = 0.125
    tie_sign: int = -1
    turning_tol: float = 0.05
    alpha: float = 0.0027
    burn_in: int = 20
    restart: str = "after_tau"
    eca_delta_t_max: int = 5
    eca_tau: int = 0
    eca_replications: int = 10_000
    seed: int | None = None

    def __post_init__(self) -> None:
        check_interval(self.threshold, "threshold", high=0.0, high_open=True)
        if not self.detectors:
            raise ConfigurationError("at least one detector is required")
        seen: list[str] = []
        for det in self.detectors:
            check_choice(det, "detector", DETECTOR_CHOICES)
            if det not in seen:
                seen.append(det)
        object.__setattr__(self, "detectors", tuple(seen))
        EwmaParams(lam=self.lam, kappa=self.kappa, sigma=self.sigma)
        check_interval(self.turning_tol, "turning_tol", 0.0, low_open=True)
        check_interval(self.alpha, "alpha", 0.0, 1.0, low_open=True, high_open=True)
        if self.burn_in < 1:
            raise ConfigurationError(f"burn_in must be >= 1, got {self.burn_in}")
        check_choice(self.restart, "restart", ("after_tau", "after_detection"))
        if self.eca_delta_t_max < 0:
            raise ConfigurationError(
                f"eca_delta_t_max must be >= 0, got {self.eca_delta_t_max}"
            )
        if self.eca_tau < 0:
            raise ConfigurationError(f"eca_tau must be >= 0, got {self.eca_tau}")
        if self.eca_replications < 1000:
            raise ConfigurationError(
                f"eca_replications must be >= 1000, got {self.eca_replications}"
            )


@dataclass(frozen=True)
class DatedDetection:
    """A change-point alarm with its indices mapped back to months."""

    detector: str
    detection_index: int
    detection_date: date
    tau_hat: int
    tau_date: date
    statistic: float

    def as_dict(self) -> dict:
        return {
            "detector": self.detector,
            "detection_index": self.detection_index,
            "detection_date": format_month(self.detection_date),
            "tau_hat": self.tau_hat,
            "tau_date": format_month(self.tau_date),
            "statistic": self.statistic,
        }


@dataclass(frozen=True)
class PipelineResult:
    """Everything a pipeline run produced, writable to an output folder."""

    config: PipelineConfig
    summary: SummaryStats
    n_observations: int
    series_start: date
    series_end: date
    events: tuple[EventRecord, ...]
    estimates: Phase1Estimates
    monitored_months: tuple[date, ...]
    monitored_z: np.ndarray
    runs: Mapping[str, MonitorRun]
    detections: tuple[DatedDetection, ...]
    segments: Mapping[str, tuple]
    ewma: EwmaRunResult | None
    eca: tuple[EcaResult, ...]
    eca_delta_ts: tuple[int, ...]

    def write(self, out_dir) -> dict:
        """Write all output files plus ``manifest.json``; returns the manifest."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "events.json": _json_bytes(events_as_dicts(self.events)),
            "phase1.json": _json_bytes({
                "estimates": self.estimates.as_dict(),
                "series": {
                    "start": format_month(self.series_start),
                    "end": format_month(self.series_end),
                    "observations": self.n_observations,
                    "summary": self.summary.as_dict(),
                },
                "threshold": self.config.threshold,
            }),
            "detections.json": _json_bytes([d.as_dict() for d in self.detections]),
            "segments.csv": self._segments_csv(),
            "eca.csv": self._eca_csv(),
        }
        if self.ewma is not None:
            files["ewma.csv"] = self._ewma_csv()
        manifest = {
            "version": __version__,
            "config": asdict(self.config),
            "window": {
                "start": format_month(self.estimates.window_start),
                "end": format_month(self.estimates.window_end),
            },
            "files": [
                {
                    "name": name,
                    "bytes": len(payload),
                    "sha256": hashlib.sha256(payload).hexdigest(),
                }
                for name, payload in sorted(files.items())
            ],
        }
        for name, payload in files.items():
            (out / name).write_bytes(payload)
        (out / "manifest.json").write_bytes(_json_bytes(manifest))
        return manifest

    def _ewma_csv(self) -> bytes:
        run = self.ewma
        signals = set(run.signals)
        lines = ["event_date,z_star,ucl,signal"]
        for month, z in zip(run.months, run.z_star):
            lines.append(
                f"{format_month(month)},{z:.10g},{run.ucl:.10g},"
                f"{1 if month in signals else 0}"
            )
        return ("\n".join(lines) + "\n").encode()

    def _segments_csv(self) -> bytes:
        lines = ["detector,start_index,end_index,start_date,end_date,mean_z"]
        for det in self.config.detectors:
            if det not in self.segments:
                continue
            for (lo, hi), mean in self.segments[det]:
                lines.append(
                    f"{det},{lo},{hi},{format_month(self.monitored_months[lo - 1])},"
                    f"{format_month(self.monitored_months[hi - 1])},{mean:.10g}"
                )
        return ("\n".join(lines) + "\n").encode()

    def _eca_csv(self) -> bytes:
        lines = ["delta_t,rp,p_value"]
        for dt, row in zip(self.eca_delta_ts, self.eca):
            lines.append(f"{dt},{row.rp:.10g},{row.p_value:.10g}")
        return ("\n".join(lines) + "\n").encode()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def run_pipeline(
    series: IndexSeries,
    window: tuple[date, date],
    config: PipelineConfig = PipelineConfig(),
    tables: Mapping[str, ThresholdTable] | None = None,
) -> PipelineResult:
    """Run the full analysis; raises DataError when the series cannot
    support it (no events after the window, baseline too sparse)."""
    events = extract_events(series, config.threshold)
    estimates = estimate_phase1(events, window)
    ss = _seed_sequence(config.seed)
    ewma_seed, eca_seed = ss.spawn(2)

    w_start = month_index(window[0])
    w_end = month_index(estimates.window_end)
    monitored = [e for e in events if month_index(e.month) >= w_start]
    months, z = ratio_stream(monitored, estimates)

    cpm_tables = resolve_tables(
        config.detectors, alpha=config.alpha, burn_in=config.burn_in, tables=tables
    )
    runs: dict[str, MonitorRun] = {}
    detections: list[DatedDetection] = []
    segments: dict[str, tuple] = {}
    for det, table in cpm_tables.items():
        run = monitor_run(z, table, restart=config.restart)
        runs[det] = run
        for d in run.detections:
            detections.append(DatedDetection(
                detector=det,
                detection_index=d.detection_index,
                detection_date=months[d.detection_index - 1],
                tau_hat=d.tau_hat,
                tau_date=months[d.tau_hat - 1],
                statistic=d.statistic,
            ))
        segments[det] = tuple(segment_means(z, run.detections))

    ewma_run = None
    if "ewma" in config.detectors:
        post = [e for e in events if month_index(e.month) > w_end]
        if not post:
            raise DataError(
                f"no events after the baseline window ending {format_month(estimates.window_end)}"
            )
        ewma_run = run_chart(
            post,
            estimates,
            EwmaParams(lam=config.lam, kappa=config.kappa, sigma=config.sigma),
            random_state=ewma_seed,
            tie_sign=config.tie_sign,
            turning_tol=config.turning_tol,
        )

    # coincidence of change-point months (A) with chart-renewal months
    # (B), judged over the monitoring span; anything the charts place
    # inside the baseline window is not a monitoring-era finding
    eca_rows: tuple[EcaResult, ...] = ()
    delta_ts: tuple[int, ...] = ()
    span = (w_end + 1, month_index(series.end))
    a_all = {month_index(d.tau_date) for d in detections if d.detector == "ks"}
    b_all = (
        {month_index(m) for m in ewma_run.turning_months}
        if ewma_run is not None else set()
    )
    a_times = sorted(t for t in a_all if span[0] <= t <= span[1])
    b_times = sorted(t for t in b_all if span[0] <= t <= span[1])
    if a_times and b_times:
        delta_ts = tuple(range(config.eca_delta_t_max + 1))
        eca_rows = tuple(eca_table(
            a_times,
            b_times,
            delta_ts,
            tau=config.eca_tau,
            replications=config.eca_replications,
            random_state=eca_seed,
            span=span,
        ))

    return PipelineResult(
        config=config,
        summary=describe(series),
        n_observations=len(series),
        series_start=series.start,
        series_end=series.end,
        events=tuple(events),
        estimates=estimates,
        monitored_months=tuple(months),
        monitored_z=z,
        runs=runs,
        detections=tuple(detections),
        segments=segments,
        ewma=ewma_run,
        eca=eca_rows,
        eca_delta_ts=delta_ts,
    )
