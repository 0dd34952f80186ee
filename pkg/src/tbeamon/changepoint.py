"""Sequential nonparametric change-point charts on the normalized ratio stream.

Two detectors share one growing-window protocol. The rank detector
("mw") tests every split k of the current window with the standardized
Mann-Whitney statistic and takes the largest absolute value; it targets
location shifts in either direction. The ECDF detector ("ks") does the
same with the one-sided two-sample dominance distance standardized by
Monte Carlo null moments; like the clamped EWMA chart it faces the
deterioration direction, reacting to distributional change that pushes
the monitored ratio upward (events arriving sooner and stronger). Both
are distribution-free: their statistics depend on the data only through
ranks, so thresholds calibrated on uniform noise hold for any
continuous stream.

Per-window-size thresholds h_n are calibrated so the conditional false
alarm probability at each size n, given survival so far, equals alpha.
Monitoring tests once the window exceeds a burn-in, signals when the max
statistic exceeds h_n, estimates the change location as the maximizing
split, and restarts with the post-change observations replayed so
multiple change points can be found.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from ._kernels import KS_LIMIT_MEAN, KS_LIMIT_SD, ks_trace, monitor_stream, mw_trace
from ._validation import as_float_array, check_choice, check_interval
from .errors import CalibrationError, ConfigurationError, DataError
from .series import EventRecord
from .tbea import Phase1Estimates, estimate_phase1, ratio_stream

DETECTORS = ("mw", "ks")

_FORMAT_TAG = "tbeamon-threshold-table v1"


def mw_u(z, k: int) -> int:
    """Rank-based split statistic: sum of sign(z_i - z_j) over the split.

    Pairs (i, j) run over i in the first k observations and j in the
    rest; ties contribute zero. Positive values mean the early segment
    tends to exceed the late one.
    """
    z = as_float_array(z, "z")
    if not 1 <= k <= z.size - 1:
        raise ConfigurationError(f"split k must be in [1, {z.size - 1}], got {k}")
    return int(np.sign(z[:k, None] - z[None, k:]).sum())


def mw_standardize(u: float, k: int, n: int) -> float:
    """Scale the split statistic to zero mean, unit variance under the null.

    The no-ties null variance is k(n-k)(n+1)/3; residual tie effects are
    absorbed by calibrating thresholds on the same statistic.
    """
    if not 1 <= k <= n - 1:
        raise ConfigurationError(f"split k must be in [1, {n - 1}], got {k}")
    return float(u) / np.sqrt(k * (n - k) * (n + 1.0) / 3.0)


def mw_tmax(z) -> tuple[float, int]:
    """Largest absolute standardized split statistic and its split.

    Ties in the maximum go to the smallest split.
    """
    z = as_float_array(z, "z")
    n = z.size
    if n < 2:
        raise ConfigurationError(f"need at least 2 observations, got {n}")
    u = np.zeros(n + 1)
    wbuf = np.empty(n)
    for m in range(n):
        _kernels._mw_ingest(wbuf, u, m, z[m])
    stat, k = _kernels._mw_max(u, n)
    return float(stat), int(k)


def ks_d(z, k: int, signed: bool = False) -> float:
    """Two-sample sup-distance between the first k observations and the rest.

    ``signed=True`` returns the one-sided dominance form instead: the
    largest excess of the first segment's ECDF over the rest's, positive
    exactly when the later observations sit above the earlier ones. The
    chart statistic uses this directional form; the symmetric default is
    the classical distance between the two segments.
    """
    z = as_float_array(z, "z")
    t = z.size
    if not 1 <= k <= t - 1:
        raise ConfigurationError(f"split k must be in [1, {t - 1}], got {k}")
    s1 = np.sort(z[:k])
    s2 = np.sort(z[k:])
    grid = np.unique(z)
    f1 = np.searchsorted(s1, grid, side="right") / k
    f2 = np.searchsorted(s2, grid, side="right") / (t - k)
    diff = f1 - f2
    if signed:
        return float(diff.max())
    return float(np.abs(diff).max())


@dataclass(frozen=True)
class KsNullMoments:
    """Monte Carlo null mean/sd of the dominance distance, per (window, split).

    Arrays are indexed ``[t, k]`` and hold NaN outside 2 <= t <= n_max
    and 1 <= k <= t-1, and at any cell whose estimated null spread is
    zero, so lookups fail loudly rather than divide by zero. Lookups
    beyond ``n_max`` fall back to the one-sided limit law, mean and sd
    scaling as sqrt(t/(k(t-k))).
    """

    mean: np.ndarray
    sd: np.ndarray
    n_max: int
    replications: int
    seed: int | None

    def lookup(self, k: int, t: int) -> tuple[float, float]:
        if t < 2 or not 1 <= k <= t - 1:
            raise ConfigurationError(f"no null moments for split {k} of window {t}")
        if t <= self.n_max:
            mu = float(self.mean[t, k])
            sd = float(self.sd[t, k])
            if not (np.isfinite(mu) and np.isfinite(sd) and sd > 0):
                raise ConfigurationError(
                    f"null moments for split {k} of window {t} are degenerate or missing"
                )
            return mu, sd
        root = float(np.sqrt(t / (k * (t - k))))
        return KS_LIMIT_MEAN * root, KS_LIMIT_SD * root

    def check_window_range(self, lo: int, hi: int) -> None:
        """Require usable moments for every split of every t in [lo, hi]."""
        for t in range(lo, min(hi, self.n_max) + 1):
            row_mu = self.mean[t, 1:t]
            row_sd = self.sd[t, 1:t]
            if not (np.all(np.isfinite(row_mu)) and np.all(np.isfinite(row_sd)) and np.all(row_sd > 0)):
                raise ConfigurationError(f"null moments incomplete for window size {t}")


def ks_tmax(z, null_moments: KsNullMoments) -> tuple[float, int]:
    """Largest standardized dominance distance over splits and its split.

    One-sided: the raw distance at each split is the excess of the early
    segment's ECDF over the late one's, so the statistic grows when the
    observations after the split sit higher.
    """
    z = as_float_array(z, "z")
    t = z.size
    if t < 2:
        raise ConfigurationError(f"need at least 2 observations, got {t}")
    order = np.argsort(z, kind="stable")
    svals = z[order]
    stime = (order + 1).astype(np.int64)
    best = -np.inf
    best_k = 0
    for k in range(1, t):
        d = _kernels._ks_raw(svals, stime, t, k, False)
        mu, sd = null_moments.lookup(k, t)
        v = (d - mu) / sd
        if v > best:
            best = v
            best_k = k
    return float(best), int(best_k)


@dataclass(frozen=True)
class ChangePointDetection:
    """One alarm: where it fired, the estimated change, the statistic."""

    detector: str
    detection_index: int
    tau_hat: int
    statistic: float


@dataclass(frozen=True)
class MonitorRun:
    """Monitoring outcome plus bookkeeping about table coverage."""

    detections: tuple[ChangePointDetection, ...]
    table_extended: bool
    max_window: int


@dataclass(frozen=True)
class ThresholdTable:
    """Per-window-size alarm thresholds h_n for one detector and alpha.

    ``thresholds[n]`` is defined for burn_in < n <= n_max and NaN below;
    window sizes beyond n_max reuse the last entry (monitoring flags
    this). KS tables carry the null moments used to standardize their
    statistic; the two must travel together because thresholds are
    quantiles of the standardized maximum.
    """

    detector: str
    alpha: float
    burn_in: int
    n_max: int
    thresholds: np.ndarray
    replications: int
    seed: int | None
    moments: KsNullMoments | None = None

    def __post_init__(self) -> None:
        check_choice(self.detector, "detector", DETECTORS)
        check_interval(self.alpha, "alpha", 0.0, 1.0, low_open=True, high_open=True)
        if not (1 <= self.burn_in < self.n_max):
            raise ConfigurationError(
                f"need 1 <= burn_in < n_max, got burn_in={self.burn_in} n_max={self.n_max}"
            )
        th = np.asarray(self.thresholds, dtype=np.float64)
        if th.shape != (self.n_max + 1,):
            raise ConfigurationError(
                f"thresholds must have shape ({self.n_max + 1},), got {th.shape}"
            )
        body = th[self.burn_in + 1 :]
        if not (np.all(np.isfinite(body)) and np.all(body > 0)):
            raise ConfigurationError("thresholds must be positive and finite over the full range")
        object.__setattr__(self, "thresholds", th)
        if self.detector == "ks":
            if self.moments is None:
                raise ConfigurationError("a ks table requires its null moments")
            if self.moments.n_max < self.n_max:
                raise ConfigurationError(
                    f"moments cover windows up to {self.moments.n_max}, table needs {self.n_max}"
                )
            self.moments.check_window_range(self.burn_in + 1, self.n_max)

    def threshold_for(self, n: int) -> float:
        """h_n, reusing the last calibrated value past the table end."""
        if n <= self.burn_in:
            raise ConfigurationError(f"no testing at window size {n} (burn-in {self.burn_in})")
        return float(self.thresholds[min(n, self.n_max)])

    def save(self, path) -> None:
        """Write `#` metadata plus `n,threshold` rows; KS moments go to a
        sidecar ``<name>.moments.npz`` next to the table."""
        path = Path(path)
        lines = [
            f"# {_FORMAT_TAG}",
            f"# detector: {self.detector}",
            f"# alpha: {self.alpha:.17g}",
            f"# burn_in: {self.burn_in}",
            f"# n_max: {self.n_max}",
            f"# replications: {self.replications}",
            f"# seed: {self.seed if self.seed is not None else 'none'}",
        ]
        if self.moments is not None:
            sidecar = path.stem + ".moments.npz"
            lines += [
                f"# moments_file: {sidecar}",
                f"# moments_replications: {self.moments.replications}",
                f"# moments_seed: {self.moments.seed if self.moments.seed is not None else 'none'}",
            ]
            np.savez_compressed(
                path.with_name(sidecar),
                mean=self.moments.mean.astype(np.float32),
                sd=self.moments.sd.astype(np.float32),
                n_max=self.moments.n_max,
                replications=self.moments.replications,
                seed=str(self.moments.seed),
            )
        lines.append("n,threshold")
        for n in range(self.burn_in + 1, self.n_max + 1):
            lines.append(f"{n},{self.thresholds[n]:.17g}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ThresholdTable":
        path = Path(path)
        meta: dict[str, str] = {}
        rows: list[tuple[int, float]] = []
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read threshold table {path}: {exc}") from exc
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if ":" in body:
                    key, _, value = body.partition(":")
                    meta[key.strip()] = value.strip()
                continue
            if line == "n,threshold":
                continue
            n_str, _, h_str = line.partition(",")
            try:
                rows.append((int(n_str), float(h_str)))
            except ValueError as exc:
                raise DataError(f"bad threshold row {line!r} in {path}") from exc
        try:
            detector = meta["detector"]
            alpha = float(meta["alpha"])
            burn_in = int(meta["burn_in"])
            n_max = int(meta["n_max"])
            replications = int(meta["replications"])
        except KeyError as exc:
            raise DataError(f"threshold table {path} lacks metadata field {exc}") from exc
        seed = None if meta.get("seed", "none") == "none" else int(meta["seed"])
        thresholds = np.full(n_max + 1, np.nan)
        for n, h in rows:
            if not burn_in < n <= n_max:
                raise DataError(f"threshold row n={n} outside ({burn_in}, {n_max}] in {path}")
            thresholds[n] = h
        moments = None
        if "moments_file" in meta:
            moments = _load_moments(path.with_name(meta["moments_file"]))
        return cls(
            detector=detector,
            alpha=alpha,
            burn_in=burn_in,
            n_max=n_max,
            thresholds=thresholds,
            replications=replications,
            seed=seed,
            moments=moments,
        )


def _load_moments(path: Path) -> KsNullMoments:
    try:
        with np.load(path) as npz:
            seed_str = str(npz["seed"])
            return KsNullMoments(
                mean=npz["mean"].astype(np.float64),
                sd=npz["sd"].astype(np.float64),
                n_max=int(npz["n_max"]),
                replications=int(npz["replications"]),
                seed=None if seed_str == "None" else int(seed_str),
            )
    except OSError as exc:
        raise ConfigurationError(f"cannot read null moments {path}: {exc}") from exc


def _seed_sequence(random_state) -> np.random.SeedSequence:
    if isinstance(random_state, np.random.SeedSequence):
        return random_state
    if random_state is None or isinstance(random_state, (int, np.integer)):
        return np.random.SeedSequence(random_state)
    raise ConfigurationError(
        "calibration needs a reproducible seed: pass an int, a SeedSequence, or None"
    )


def _seed_value(ss: np.random.SeedSequence) -> int | None:
    return int(ss.entropy) if isinstance(ss.entropy, (int, np.integer)) else None


def estimate_ks_null_moments(
    n_max: int,
    replications: int,
    random_state=None,
    burn_in: int = 1,
) -> KsNullMoments:
    """Monte Carlo mean/sd of the raw dominance distance for every (t, k).

    Any cell whose estimated null spread is zero is left NaN so
    downstream lookups fail loudly rather than divide by zero.
    """
    if replications < 100:
        raise ConfigurationError(f"moment estimation needs >= 100 replications, got {replications}")
    ss = _seed_sequence(random_state)
    sums = np.zeros((n_max + 1, n_max + 1))
    sumsq = np.zeros((n_max + 1, n_max + 1))
    for child in ss.spawn(replications):
        z = np.random.default_rng(child).random(n_max)
        _kernels.ks_accumulate_moments(z, sums, sumsq)
    mean = sums / replications
    var = np.maximum(sumsq - replications * mean**2, 0.0) / (replications - 1)
    sd = np.sqrt(var)
    t_idx, k_idx = np.indices(mean.shape, sparse=True)
    invalid = (t_idx < 2) | (k_idx < 1) | (k_idx > t_idx - 1) | (sd <= 0)
    mean[invalid] = np.nan
    sd[invalid] = np.nan
    return KsNullMoments(
        mean=mean, sd=sd, n_max=n_max, replications=replications, seed=_seed_value(ss)
    )


def _empirical_threshold(vals: np.ndarray, alpha: float) -> float:
    """Observed value whose strict-exceedance rate is closest to alpha.

    The max statistics have atoms at small window sizes (rank and ECDF
    statistics live on lattices), so a fixed order-statistic convention
    would systematically under- or overshoot the target hazard; choosing
    the candidate with the nearest realized rate keeps the conditional
    false alarm probability centered on alpha. Rate ties prefer the
    higher threshold (the conservative side).
    """
    uniq, counts = np.unique(vals, return_counts=True)
    exceed_rate = 1.0 - np.cumsum(counts) / vals.size
    diff = np.abs(exceed_rate - alpha)
    best = diff.size - 1 - int(np.argmin(diff[::-1]))
    return float(uniq[best])


def _null_traces(
    detector: str,
    burn_in: int,
    n_max: int,
    children: Sequence[np.random.SeedSequence],
    moments: KsNullMoments | None,
) -> np.ndarray:
    """Per-replication max-statistic traces on uniform noise (rows: reps)."""
    traces = np.empty((len(children), n_max + 1), dtype=np.float32)
    buf = np.full(n_max + 1, -np.inf)
    for r, child in enumerate(children):
        z = np.random.default_rng(child).random(n_max)
        if detector == "mw":
            mw_trace(z, burn_in, buf)
        else:
            ks_trace(z, burn_in, moments.mean, moments.sd, moments.n_max, buf)
        traces[r] = buf
    return traces


def calibrate_thresholds(
    detector: str,
    alpha: float = 0.0027,
    burn_in: int = 20,
    n_max: int = 500,
    replications: int = 20_000,
    random_state=None,
    moments: KsNullMoments | None = None,
    moments_replications: int | None = None,
) -> ThresholdTable:
    """Sequential-quantile calibration of per-n thresholds on uniform noise.

    For each window size n past the burn-in, h_n is the empirical
    (1-alpha) quantile of the max statistic among replications that have
    not alarmed at any earlier size (see :func:`_empirical_threshold` for
    the atom-aware convention); replications exceeding h_n are then
    eliminated. This makes the conditional false alarm probability at
    every n equal to alpha, which is the property the monitoring
    protocol needs. Rank invariance makes uniform draws representative
    of any continuous null.

    For the ks detector the null moments are estimated first (pass
    ``moments`` to reuse an existing estimate). Results are reproducible
    from an integer seed; the seed is recorded in the table.
    """
    check_choice(detector, "detector", DETECTORS)
    check_interval(alpha, "alpha", 0.0, 0.1, low_open=True)
    needed = int(np.ceil(10.0 / alpha))
    if replications < needed:
        raise ConfigurationError(
            f"alpha={alpha} needs at least {needed} replications, got {replications}"
        )
    if not 1 <= burn_in < n_max:
        raise ConfigurationError(
            f"need 1 <= burn_in < n_max, got burn_in={burn_in} n_max={n_max}"
        )
    if detector == "ks" and burn_in < 2:
        raise ConfigurationError(
            "ks calibration needs burn_in >= 2: a two-point window gives a two-atom statistic"
        )
    ss = _seed_sequence(random_state)
    children = ss.spawn(replications)
    if detector == "ks" and moments is None:
        n_mom = moments_replications or min(replications, 10_000)
        moments = estimate_ks_null_moments(n_max, n_mom, ss.spawn(1)[0])
    if detector == "ks":
        moments.check_window_range(burn_in + 1, n_max)
    traces = _null_traces(detector, burn_in, n_max, children, moments)

    thresholds = np.full(n_max + 1, np.nan)
    alive = np.arange(replications)
    min_pool = int(np.ceil(1.0 / alpha))
    for n in range(burn_in + 1, n_max + 1):
        if alive.size < min_pool:
            raise CalibrationError(
                f"only {alive.size} survivors reached window size {n}; "
                f"increase replications (need at least {min_pool} to place the quantile)"
            )
        vals = traces[alive, n]
        h = _empirical_threshold(vals, alpha)
        thresholds[n] = h
        alive = alive[vals <= h]
    return ThresholdTable(
        detector=detector,
        alpha=alpha,
        burn_in=burn_in,
        n_max=n_max,
        thresholds=thresholds,
        replications=replications,
        seed=_seed_value(ss),
        moments=moments if detector == "ks" else None,
    )


@dataclass(frozen=True)
class HazardReport:
    """Fresh-sample estimate of the per-n conditional alarm probability."""

    ns: np.ndarray
    hazard: np.ndarray
    tested: np.ndarray
    alpha: float

    def two_se(self) -> np.ndarray:
        """Two binomial standard errors of the hazard at each n."""
        return 2.0 * np.sqrt(self.alpha * (1.0 - self.alpha) / self.tested)


def validate_table(table: ThresholdTable, replications: int, random_state=None) -> HazardReport:
    """Measure the realized hazard of a table on an independent null sample.

    Streams that alarm at size n drop out of later sizes, mirroring
    monitoring, so ``hazard[n]`` estimates the conditional false alarm
    probability that calibration pinned at alpha.
    """
    if replications < 100:
        raise ConfigurationError(f"validation needs >= 100 replications, got {replications}")
    ss = _seed_sequence(random_state)
    traces = _null_traces(
        table.detector, table.burn_in, table.n_max, ss.spawn(replications), table.moments
    )
    ns = np.arange(table.burn_in + 1, table.n_max + 1)
    hazard = np.empty(ns.size)
    tested = np.empty(ns.size, dtype=np.int64)
    alive = np.arange(replications)
    for j, n in enumerate(ns):
        vals = traces[alive, n]
        exceed = vals > table.thresholds[n]
        tested[j] = alive.size
        hazard[j] = exceed.mean() if alive.size else np.nan
        alive = alive[~exceed]
    return HazardReport(ns=ns, hazard=hazard, tested=tested, alpha=table.alpha)


def monitor_run(z, table: ThresholdTable, restart: str = "after_tau") -> MonitorRun:
    """Monitor a stream with growing windows and restart on detection.

    ``restart="after_tau"`` keeps the observations after the estimated
    change as the new window (they belong to the new regime by the
    detection's own account); ``"after_detection"`` discards everything
    through the alarm. Indices in the detections are global and 1-based.
    """
    z = as_float_array(z, "z")
    check_choice(restart, "restart", ("after_tau", "after_detection"))
    if z.size <= table.burn_in:
        return MonitorRun(detections=(), table_extended=False, max_window=0)
    if table.detector == "ks":
        mean2d, sd2d, mom_nmax = table.moments.mean, table.moments.sd, table.moments.n_max
        flag = _kernels.KS_DETECTOR
    else:
        mean2d = sd2d = np.zeros((1, 1))
        mom_nmax = 0
        flag = _kernels.MW_DETECTOR
    det, tau, stats, max_tested = monitor_stream(
        z, table.burn_in, table.thresholds, flag, mean2d, sd2d, mom_nmax,
        restart == "after_tau",
    )
    detections = tuple(
        ChangePointDetection(
            detector=table.detector,
            detection_index=int(d),
            tau_hat=int(t),
            statistic=float(s),
        )
        for d, t, s in zip(det, tau, stats)
    )
    return MonitorRun(
        detections=detections,
        table_extended=max_tested > table.n_max,
        max_window=int(max_tested),
    )


def monitor(z, table: ThresholdTable, restart: str = "after_tau") -> list[ChangePointDetection]:
    """Detections only; see :func:`monitor_run` for coverage bookkeeping."""
    return list(monitor_run(z, table, restart).detections)


def segment_means(z, detections: Sequence[ChangePointDetection]) -> list[tuple[tuple[int, int], float]]:
    """Mean of z over each inter-change segment, split at the tau_hats.

    Returns ``((start, end), mean)`` with 1-based inclusive bounds; no
    detections yields the single global segment.
    """
    z = as_float_array(z, "z")
    taus = [d.tau_hat for d in detections]
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ConfigurationError(f"change points must be strictly increasing, got {taus}")
    if taus and not (1 <= taus[0] and taus[-1] <= z.size - 1):
        raise ConfigurationError(f"change points must lie in [1, {z.size - 1}], got {taus}")
    bounds = [0] + taus + [z.size]
    return [
        ((lo + 1, hi), float(z[lo:hi].mean()))
        for lo, hi in zip(bounds, bounds[1:])
    ]


@lru_cache(maxsize=4)
def _default_table_cached(detector: str) -> ThresholdTable:
    name = f"{detector}_thresholds.csv"
    data_dir = resources.files("tbeamon").joinpath("data")
    if not data_dir.joinpath(name).is_file():
        raise ConfigurationError(
            f"no packaged threshold table for detector {detector!r}; "
            f"build one with calibrate_thresholds or the calibrate command"
        )
    with resources.as_file(data_dir.joinpath(name)) as path:
        return ThresholdTable.load(path)


def default_table(detector: str, alpha: float = 0.0027, burn_in: int = 20) -> ThresholdTable:
    """The packaged threshold table, if it matches the requested design."""
    check_choice(detector, "detector", DETECTORS)
    table = _default_table_cached(detector)
    if not np.isclose(table.alpha, alpha) or table.burn_in != burn_in:
        raise ConfigurationError(
            f"packaged {detector} table is calibrated for alpha={table.alpha}, "
            f"burn_in={table.burn_in}; requested alpha={alpha}, burn_in={burn_in}. "
            f"Calibrate a matching table instead"
        )
    return table


def resolve_tables(
    detectors,
    alpha: float = 0.0027,
    burn_in: int = 20,
    tables=None,
) -> dict[str, ThresholdTable]:
    """One consistent table per change-point detector in ``detectors``.

    Non-CPM names (the EWMA chart) are skipped. Entries missing from
    ``tables`` fall back to the packaged defaults; every table must
    match the requested detector, alpha and burn-in, so a report quoting
    the configuration cannot silently disagree with what actually ran.
    """
    resolved: dict[str, ThresholdTable] = {}
    for det in detectors:
        if det not in DETECTORS:
            continue
        table = None if tables is None else tables.get(det)
        if table is None:
            table = default_table(det, alpha=alpha, burn_in=burn_in)
        if not isinstance(table, ThresholdTable):
            raise ConfigurationError(f"tables[{det!r}] must be a ThresholdTable")
        if table.detector != det:
            raise ConfigurationError(
                f"tables[{det!r}] was calibrated for detector {table.detector!r}"
            )
        if table.alpha != alpha or table.burn_in != burn_in:
            raise ConfigurationError(
                f"table for {det!r} has alpha={table.alpha}, burn_in={table.burn_in}; "
                f"requested alpha={alpha}, burn_in={burn_in}"
            )
        resolved[det] = table
    return resolved


class ChangePointMonitor(BaseEstimator):
    """Estimator wrapper: baseline normalization on fit, monitoring on predict.

    ``fit`` estimates the gap/amplitude baselines from the baseline
    events and keeps their normalized ratio values as the warm prefix of
    the monitored stream. ``predict`` appends the new events' ratios and
    runs sequential monitoring over the combined stream, so detections
    carry global 1-based indices into baseline + new observations.
    ``transform`` returns just the normalized ratios.
    """

    def __init__(
        self,
        detector: str = "ks",
        alpha: float = 0.0027,
        burn_in: int = 20,
        restart: str = "after_tau",
        threshold_table: ThresholdTable | str | None = None,
    ):
        self.detector = detector
        self.alpha = alpha
        self.burn_in = burn_in
        self.restart = restart
        self.threshold_table = threshold_table

    def _resolve_table(self) -> ThresholdTable:
        if isinstance(self.threshold_table, ThresholdTable):
            table = self.threshold_table
        elif self.threshold_table is None:
            return default_table(self.detector, self.alpha, self.burn_in)
        else:
            table = ThresholdTable.load(self.threshold_table)
        if table.detector != self.detector:
            raise ConfigurationError(
                f"table is for detector {table.detector!r}, monitor wants {self.detector!r}"
            )
        if not np.isclose(table.alpha, self.alpha) or table.burn_in != self.burn_in:
            raise ConfigurationError(
                f"table design (alpha={table.alpha}, burn_in={table.burn_in}) does not match "
                f"monitor (alpha={self.alpha}, burn_in={self.burn_in})"
            )
        return table

    def fit(self, X, y=None, window=None):
        """Estimate baselines from events ``X`` (or adopt estimates)."""
        check_choice(self.detector, "detector", DETECTORS)
        check_choice(self.restart, "restart", ("after_tau", "after_detection"))
        self.table_ = self._resolve_table()
        if isinstance(X, Phase1Estimates):
            self.estimates_ = X
            self.baseline_months_, self.baseline_z_ = [], np.empty(0)
        else:
            events = list(X)
            if window is None:
                if not events:
                    raise DataError("cannot fit on an empty event sequence")
                window = (events[0].month, events[-1].month)
            self.estimates_ = estimate_phase1(events, window)
            self.baseline_months_, self.baseline_z_ = ratio_stream(events, self.estimates_)
        return self

    def transform(self, X) -> np.ndarray:
        """Normalized ratio values of events ``X`` under the fitted baseline."""
        check_is_fitted(self)
        _, z = ratio_stream(list(X), self.estimates_)
        return z

    def predict(self, X) -> list[ChangePointDetection]:
        """Monitor baseline + new events; detections use global indices."""
        check_is_fitted(self)
        _, z = ratio_stream(list(X), self.estimates_)
        run = self.predict_run(np.concatenate([self.baseline_z_, z]))
        return list(run.detections)

    def predict_run(self, z) -> MonitorRun:
        """Monitor an explicit ratio stream with the fitted table."""
        check_is_fitted(self)
        return monitor_run(z, self.table_, self.restart)
