"""Monte Carlo benchmark of the event charts on a synthetic index.

The generator mimics a standardized climate index: independent monthly
values from N(mu0, sigma0^2), with the mean of the monitoring segment
shifted by ``delta`` standard deviations. Threshold crossings of the
combined stream become events; the unshifted head plays the baseline
window and supplies the gap/amplitude estimates, exactly as on real
series.

Run lengths are counted in events starting at the first event of the
shifted segment. Both chart families watch the full event stream,
baseline events included, so they measure steady-state detection
delays: the change-point windows are already populated when the shift
arrives, and the EWMA chart (which restarts at zero after any alarm)
sits at its typical in-control level rather than at zero. With
``delta=0`` the harness instead counts alarms per event over the whole
stream, the false-alarm side of the same protocol.

Replications are seeded through a spawn tree, so results do not depend
on ``n_jobs`` and any single replication can be reproduced in
isolation. Draws whose baseline segment holds fewer than three events
cannot be normalized and are redrawn (and counted).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed, effective_n_jobs

from ._kernels import ewma_alarm_at_or_after, ewma_alarm_count
from ._validation import check_choice, check_interval
from .changepoint import ThresholdTable, _seed_sequence, monitor_run, resolve_tables
from .errors import ConfigurationError, NumericError
from .ewma import EwmaParams, _check_tie_sign

DETECTOR_CHOICES = ("ewma", "ks", "mw")

# A valid draw needs >= 3 baseline events (2 gaps); at the default
# settings that fails with negligible probability, so a long redraw
# streak signals a configuration that cannot produce baselines at all.
_MAX_REDRAWS_PER_REP = 1000


@dataclass(frozen=True)
class SimConfig:
    """Settings for one benchmark run.

    ``delta`` shifts the monitoring-segment mean in units of ``sigma0``;
    0 keeps the stream in control, negative values push the index toward
    more and deeper threshold crossings. Segment lengths are in months.
    ``alpha`` and ``burn_in`` select the change-point threshold table;
    ``lam``, ``kappa`` and ``sigma`` design the EWMA chart.

    ``restart=None`` picks the mode's natural convention: detection runs
    keep the post-estimate window ("after_tau", so a false alarm before
    the shift leaves the window warm), while false-alarm runs rebuild
    from scratch ("after_detection"). A window retained across a false
    alarm is selected for looking atypical, which would inflate the
    alarm count of everything compared against it afterwards.
    """

    delta: float
    replications: int
    phase1_length: int = 500
    monitor_length: int = 1000
    mu0: float = 0.2082
    sigma0: float = 0.9213
    event_threshold: float = -1.0
    detectors: tuple[str, ...] = DETECTOR_CHOICES
    lam: float = 0.07
    kappa: float = 2.515
    sigma: float = 0.125
    tie_sign: int = -1
    alpha: float = 0.0027
    burn_in: int = 20
    restart: str | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ConfigurationError(f"replications must be >= 1, got {self.replications}")
        if self.phase1_length < 3:
            raise ConfigurationError(
                f"phase1_length must be >= 3 months, got {self.phase1_length}"
            )
        if self.monitor_length < 1:
            raise ConfigurationError(f"monitor_length must be >= 1, got {self.monitor_length}")
        check_interval(self.sigma0, "sigma0", 0.0, low_open=True)
        check_interval(self.event_threshold, "event_threshold", high=0.0, high_open=True)
        if not self.detectors:
            raise ConfigurationError("at least one detector is required")
        seen: list[str] = []
        for det in self.detectors:
            check_choice(det, "detector", DETECTOR_CHOICES)
            if det not in seen:
                seen.append(det)
        object.__setattr__(self, "detectors", tuple(seen))
        # EwmaParams re-checks lam/kappa/sigma; build one to fail early.
        EwmaParams(lam=self.lam, kappa=self.kappa, sigma=self.sigma)
        _check_tie_sign(self.tie_sign)
        check_interval(self.alpha, "alpha", 0.0, 1.0, low_open=True, high_open=True)
        if self.burn_in < 1:
            raise ConfigurationError(f"burn_in must be >= 1, got {self.burn_in}")
        if self.restart is not None:
            check_choice(self.restart, "restart", ("after_tau", "after_detection"))


@dataclass(frozen=True)
class SimReport:
    """Aggregate outcome for one detector.

    Detection runs fill ``misses``/``miss_pct``/``arl1``/``sdrl`` (run
    lengths in events from the first shifted event; a replication with
    no qualifying alarm is a miss). In-control runs fill ``detections``,
    ``events`` and their ratio ``false_alarm_rate``. Fields from the
    other mode are None.
    """

    detector: str
    replications: int
    redraws: int
    misses: int | None = None
    miss_pct: float | None = None
    arl1: float | None = None
    sdrl: float | None = None
    detections: int | None = None
    events: int | None = None
    false_alarm_rate: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimResult:
    """All detector reports from one configuration."""

    config: SimConfig
    reports: tuple[SimReport, ...]

    def report_for(self, detector: str) -> SimReport:
        for report in self.reports:
            if report.detector == detector:
                return report
        raise ConfigurationError(f"no report for detector {detector!r}")

    def as_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "reports": [report.as_dict() for report in self.reports],
        }

    def write_json(self, path) -> None:
        text = json.dumps(self.as_dict(), indent=2, sort_keys=True)
        Path(path).write_text(text + "\n", encoding="utf-8")

    def write_csv(self, path) -> None:
        """Metric-by-detector table; rows empty in this mode are dropped."""
        metrics = (
            "miss_pct", "arl1", "sdrl", "false_alarm_rate",
            "detections", "events", "misses", "replications", "redraws",
        )
        by_det = {r.detector: r.as_dict() for r in self.reports}
        order = [d for d in self.config.detectors if d in by_det]
        lines = ["metric," + ",".join(order)]
        for metric in metrics:
            row = [by_det[d][metric] for d in order]
            if all(v is None for v in row):
                continue
            cells = ["" if v is None else _format_cell(v) for v in row]
            lines.append(metric + "," + ",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _signs(values: np.ndarray, center: float, tie_sign: int) -> np.ndarray:
    s = np.sign(values - center)
    s[s == 0.0] = tie_sign
    return s


def _eventize(values: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Event positions (0-based months) and amplitudes |value| at them."""
    idx = np.flatnonzero(values <= threshold)
    return idx, np.abs(values[idx])


def _phase1_stats(idx: np.ndarray, amps: np.ndarray, phase1_length: int):
    """Baseline medians/means from events in the first segment.

    Returns (theta_t0, theta_x0, mu_t0, mu_x0, n_pre), or None when the
    segment holds fewer than 3 events (under 2 gaps, no T baseline).
    Amplitudes use every baseline event; gaps start at the second, the
    first event of a stream has none.
    """
    n_pre = int(np.searchsorted(idx, phase1_length, side="left"))
    if n_pre < 3:
        return None
    gaps_pre = np.diff(idx[:n_pre]).astype(np.float64)
    amps_pre = amps[:n_pre]
    return (
        float(np.median(gaps_pre)),
        float(np.median(amps_pre)),
        float(gaps_pre.mean()),
        float(amps_pre.mean()),
        n_pre,
    )


def _z_stream(idx: np.ndarray, amps: np.ndarray, mu_t0: float, mu_x0: float) -> np.ndarray:
    """Amplitude/gap ratio for every event after the first."""
    t_norm = np.diff(idx).astype(np.float64) / mu_t0
    x_norm = amps[1:] / mu_x0
    return x_norm / t_norm


def _replicate(
    cfg: SimConfig,
    params: EwmaParams,
    tables: Mapping[str, ThresholdTable],
    child: np.random.SeedSequence,
) -> tuple[dict, int, int]:
    """One draw: per-detector outcome, event count, redraw count.

    The outcome is a run length in events (0 = miss) when the stream is
    shifted, an alarm count when it is not. Stream and jitter use split
    seeds so the change-point results do not depend on whether the EWMA
    detector is enabled.
    """
    stream_ss, jitter_ss = child.spawn(2)
    rng = np.random.default_rng(stream_ss)
    total = cfg.phase1_length + cfg.monitor_length
    redraws = 0
    while True:
        values = rng.normal(cfg.mu0, cfg.sigma0, size=total)
        if cfg.delta != 0.0:
            values[cfg.phase1_length:] += cfg.delta * cfg.sigma0
        idx, amps = _eventize(values, cfg.event_threshold)
        stats = _phase1_stats(idx, amps, cfg.phase1_length)
        if stats is not None:
            break
        redraws += 1
        if redraws >= _MAX_REDRAWS_PER_REP:
            raise NumericError(
                "baseline segment keeps producing fewer than 3 events; "
                "lengthen phase1_length or loosen event_threshold"
            )
    theta_t0, theta_x0, mu_t0, mu_x0, n_pre = stats
    in_control = cfg.delta == 0.0
    z = _z_stream(idx, amps, mu_t0, mu_x0)
    jitter_rng = np.random.default_rng(jitter_ss)
    outcome: dict[str, int] = {}
    for det in cfg.detectors:
        if det == "ewma":
            gaps = np.diff(idx).astype(np.float64)
            s = 0.5 * (
                _signs(amps[1:], theta_x0, cfg.tie_sign)
                - _signs(gaps, theta_t0, cfg.tie_sign)
            )
            s_star = s + params.sigma * jitter_rng.standard_normal(s.size)
            if in_control:
                outcome[det] = int(ewma_alarm_count(s_star, params.lam, params.ucl))
            else:
                # steady state: the chart has been running (and renewing
                # after any alarm) since the start of the stream
                hit = ewma_alarm_at_or_after(s_star, params.lam, params.ucl, n_pre)
                outcome[det] = int(hit - n_pre + 1) if hit else 0
        else:
            run = monitor_run(z, tables[det], restart=cfg.restart)
            if in_control:
                outcome[det] = len(run.detections)
            else:
                rl = 0
                for d in run.detections:
                    if d.detection_index >= n_pre:
                        rl = d.detection_index - n_pre + 1
                        break
                outcome[det] = rl
    return outcome, int(idx.size), redraws


def _replicate_batch(cfg, params, tables, children) -> list:
    return [_replicate(cfg, params, tables, child) for child in children]


def _resolve_tables(
    cfg: SimConfig,
    tables: Mapping[str, ThresholdTable] | None,
) -> dict[str, ThresholdTable]:
    return resolve_tables(cfg.detectors, alpha=cfg.alpha, burn_in=cfg.burn_in, tables=tables)


def _aggregate(cfg: SimConfig, results: Sequence[tuple]) -> SimResult:
    in_control = cfg.delta == 0.0
    redraws = sum(r[2] for r in results)
    total_events = sum(r[1] for r in results)
    reports = []
    for det in cfg.detectors:
        vals = np.array([r[0][det] for r in results], dtype=np.int64)
        if in_control:
            detections = int(vals.sum())
            reports.append(SimReport(
                detector=det,
                replications=cfg.replications,
                redraws=redraws,
                detections=detections,
                events=total_events,
                false_alarm_rate=detections / total_events,
            ))
        else:
            hit = vals[vals > 0]
            misses = int(vals.size - hit.size)
            reports.append(SimReport(
                detector=det,
                replications=cfg.replications,
                redraws=redraws,
                misses=misses,
                miss_pct=100.0 * misses / vals.size,
                arl1=float(hit.mean()) if hit.size else None,
                sdrl=float(hit.std(ddof=1)) if hit.size >= 2 else None,
            ))
    return SimResult(config=cfg, reports=tuple(reports))


def _run(cfg: SimConfig, tables, n_jobs: int) -> SimResult:
    params = EwmaParams(lam=cfg.lam, kappa=cfg.kappa, sigma=cfg.sigma)
    resolved = _resolve_tables(cfg, tables)
    children = _seed_sequence(cfg.seed).spawn(cfg.replications)
    if effective_n_jobs(n_jobs) == 1:
        results = _replicate_batch(cfg, params, resolved, children)
    else:
        n_chunks = min(cfg.replications, 4 * effective_n_jobs(n_jobs))
        chunks = np.array_split(np.arange(cfg.replications), n_chunks)
        batches = Parallel(n_jobs=n_jobs)(
            delayed(_replicate_batch)(
                cfg, params, resolved, [children[i] for i in chunk]
            )
            for chunk in chunks if chunk.size
        )
        results = [rep for batch in batches for rep in batch]
    return _aggregate(cfg, results)


def simulate_in_control(
    cfg: SimConfig,
    tables: Mapping[str, ThresholdTable] | None = None,
    n_jobs: int = 1,
) -> SimResult:
    """False-alarm benchmark: alarms per event on unshifted streams."""
    if cfg.delta != 0.0:
        raise ConfigurationError(f"in-control benchmark needs delta=0, got {cfg.delta}")
    if cfg.restart is None:
        cfg = replace(cfg, restart="after_detection")
    return _run(cfg, tables, n_jobs)


def simulate_out_of_control(
    cfg: SimConfig,
    tables: Mapping[str, ThresholdTable] | None = None,
    n_jobs: int = 1,
) -> SimResult:
    """Detection benchmark: run length in events after the shift."""
    if cfg.delta == 0.0:
        raise ConfigurationError("detection benchmark needs a nonzero delta")
    if cfg.restart is None:
        cfg = replace(cfg, restart="after_tau")
    return _run(cfg, tables, n_jobs)


def run_simulation(
    cfg: SimConfig,
    tables: Mapping[str, ThresholdTable] | None = None,
    n_jobs: int = 1,
) -> SimResult:
    """Dispatch on ``delta``: 0 measures false alarms, else detection."""
    if cfg.delta == 0.0:
        return simulate_in_control(cfg, tables, n_jobs)
    return simulate_out_of_control(cfg, tables, n_jobs)
