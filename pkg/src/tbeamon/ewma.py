"""Distribution-free EWMA chart on event gaps and amplitudes.

Each event is reduced to a three-valued sign statistic S comparing its
gap and amplitude against baseline medians: S = +1 when events arrive
both sooner and stronger than baseline, -1 in the opposite corner, 0
otherwise. Because S is discrete, a small Gaussian perturbation is added
(``S* ~ N(S, sigma)``) before smoothing, which makes run lengths
continuous and the chart design tractable. The monitored statistic is a
one-sided EWMA of S* clamped at zero; it signals above

    UCL = kappa * sqrt(lam * (sigma^2 + 1/2) / (2 - lam))

where 1/2 is the variance of S under the symmetric in-control law
(P(-1), P(0), P(+1)) = (1/4, 1/2, 1/4).

The in-control average run length of the chart is computed by a
Markov-chain discretization of the clamped recursion, and chart designs
(kappa for a target ARL0 at given lam) are solved by bisection on that
computation. A direct Monte Carlo ARL estimator is included as a cross
check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks
from scipy.special import ndtr
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    as_generator,
    check_choice,
    check_interval,
    check_probability_triple,
)
from .errors import ConfigurationError, DataError, NumericError
from .series import EventRecord, format_month, month_index
from .tbea import Phase1Estimates, estimate_phase1

IN_CONTROL_SIGN_PROBS = (0.25, 0.5, 0.25)

SIGMA_LOW, SIGMA_HIGH = 0.1, 0.2


def _check_sigma(sigma: float) -> float:
    return check_interval(sigma, "sigma", SIGMA_LOW, SIGMA_HIGH)


def _check_tie_sign(tie_sign: int) -> int:
    if tie_sign not in (-1, 1):
        raise ConfigurationError(f"tie_sign must be -1 or +1, got {tie_sign}")
    return int(tie_sign)


@dataclass(frozen=True)
class SignTriple:
    """Per-event sign comparisons: gap vs median, amplitude vs median.

    ``s = (sx - st) / 2`` lands in {-1, 0, +1}; +1 flags an event that is
    both earlier and stronger than baseline.
    """

    st: int
    sx: int
    s: int


def sign_stats(
    event: EventRecord,
    estimates: Phase1Estimates,
    tie_sign: int = -1,
) -> SignTriple:
    """Sign statistics of one event against the baseline medians.

    Exact ties with a median take ``tie_sign``. The default -1 treats a
    tie as not-worse (a gap equal to the baseline median is not early; an
    amplitude equal to the median is not strong), which is conservative
    for the deterioration-facing chart. Pass +1 for the anti-conservative
    convention.
    """
    _check_tie_sign(tie_sign)
    if event.gap_months is None:
        raise DataError(f"event at {format_month(event.month)} has no gap")
    dt = event.gap_months - estimates.theta_t0
    dx = event.amplitude - estimates.theta_x0
    st = tie_sign if dt == 0 else (1 if dt > 0 else -1)
    sx = tie_sign if dx == 0 else (1 if dx > 0 else -1)
    return SignTriple(st=st, sx=sx, s=(sx - st) // 2)


def continuousify(s: int, sigma: float, rng: np.random.Generator) -> float:
    """Draw ``S* ~ N(s, sigma)``, the jittered sign statistic.

    ``sigma`` is restricted to [0.1, 0.2]: large enough that run lengths
    lose their lattice structure, small enough that the three mixture
    components stay well separated.
    """
    _check_sigma(sigma)
    if s not in (-1, 0, 1):
        raise ConfigurationError(f"sign statistic must be -1, 0, or +1, got {s}")
    return float(s + sigma * rng.standard_normal())


def chart_limit(lam: float, kappa: float, sigma: float) -> float:
    """Upper control limit of the clamped EWMA of S*."""
    check_interval(lam, "lam", 0.0, 1.0, low_open=True)
    check_interval(kappa, "kappa", 0.0)
    check_interval(sigma, "sigma", 0.0)
    return kappa * np.sqrt(lam * (sigma**2 + 0.5) / (2.0 - lam))


@dataclass(frozen=True)
class EwmaParams:
    """Chart design: smoothing weight, limit multiplier, jitter scale.

    ``ucl`` is derived, never set directly. The published design for a
    370 in-control ARL is ``lam=0.07, kappa=2.515``.
    """

    lam: float = 0.07
    kappa: float = 2.515
    sigma: float = 0.125
    ucl: float = field(init=False)

    def __post_init__(self) -> None:
        check_interval(self.lam, "lam", 0.0, 1.0, low_open=True)
        check_interval(self.kappa, "kappa", 0.0, low_open=True)
        _check_sigma(self.sigma)
        object.__setattr__(self, "ucl", chart_limit(self.lam, self.kappa, self.sigma))


@dataclass(frozen=True)
class EwmaState:
    """Chart position after ``step`` events (``step=0`` is the start)."""

    step: int
    z_star: float


def ewma_update(state: EwmaState, s_star: float, lam: float) -> EwmaState:
    """One clamped-EWMA step: ``max(0, lam*s_star + (1-lam)*z)``."""
    check_interval(lam, "lam", 0.0, 1.0, low_open=True)
    z = max(0.0, lam * s_star + (1.0 - lam) * state.z_star)
    return EwmaState(step=state.step + 1, z_star=z)


def turning_points(z_star: np.ndarray, ucl: float, tol: float = 0.05) -> np.ndarray:
    """Indices of in-control local minima followed by a material rise.

    A turning point marks where the chart stops recovering and starts a
    renewed climb: a local minimum of the trajectory, below the control
    limit, with prominence at least ``tol`` (so jitter-scale wiggles do
    not count). Flat minima report their last index. Endpoints never
    qualify; a monotone trajectory has none.
    """
    check_interval(tol, "tol", 0.0, low_open=True)
    z = np.asarray(z_star, dtype=np.float64)
    if z.size < 3:
        return np.array([], dtype=np.intp)
    _, props = find_peaks(-z, prominence=tol, plateau_size=(1, None))
    idx = props["right_edges"].astype(np.intp)
    return idx[z[idx] < ucl]


@dataclass(frozen=True)
class EwmaRunResult:
    """Chart trajectory over a monitored event stream."""

    months: tuple[date, ...]
    z_star: np.ndarray
    params: EwmaParams
    signals: tuple[date, ...]
    turning_months: tuple[date, ...]

    @property
    def ucl(self) -> float:
        return self.params.ucl


def run_chart(
    events: Sequence[EventRecord],
    estimates: Phase1Estimates,
    params: EwmaParams = EwmaParams(),
    random_state=None,
    tie_sign: int = -1,
    turning_tol: float = 0.05,
) -> EwmaRunResult:
    """Run the chart from a fresh start over post-baseline events.

    Events must all carry gaps and must start strictly after the
    baseline window, so the chart statistic starts at zero with no
    overlap between estimation and monitoring. One jitter draw is made
    per event, sequentially, so runs with the same seed are identical.
    """
    if not events:
        raise DataError("no events to chart")
    if month_index(events[0].month) <= month_index(estimates.window_end):
        raise DataError(
            f"monitored events must start after the baseline window; "
            f"got {format_month(events[0].month)} <= {format_month(estimates.window_end)}"
        )
    rng = as_generator(random_state)
    s = np.array([sign_stats(e, estimates, tie_sign).s for e in events], dtype=np.float64)
    s_star = s + params.sigma * rng.standard_normal(s.size)
    z = np.empty(s.size)
    prev = 0.0
    for i in range(s.size):
        prev = max(0.0, params.lam * s_star[i] + (1.0 - params.lam) * prev)
        z[i] = prev
    months = tuple(e.month for e in events)
    signal_idx = np.nonzero(z > params.ucl)[0]
    turn_idx = turning_points(z, params.ucl, turning_tol)
    return EwmaRunResult(
        months=months,
        z_star=z,
        params=params,
        signals=tuple(months[i] for i in signal_idx),
        turning_months=tuple(months[i] for i in turn_idx),
    )


def markov_arl(
    params: EwmaParams,
    probs=IN_CONTROL_SIGN_PROBS,
    m_states: int = 301,
) -> float:
    """Zero-state average run length via Markov-chain discretization.

    The in-control band [0, UCL] is cut into ``m_states`` equal cells
    represented by their midpoints. From midpoint c the next value of
    the clamped EWMA is a three-component Gaussian mixture (components
    ``N(lam*s + (1-lam)*c, lam*sigma)`` weighted by ``probs``); all mass
    at or below the first cell's top edge folds into cell 0, absorbing
    the clamp at zero. The ARL from a zero start is the first entry of
    ``(I - Q)^-1 1``. Finer grids converge from below; 301 cells puts
    the published design within half a percent of its limit.
    """
    probs = check_probability_triple(probs)
    if m_states < 50:
        raise ConfigurationError(f"m_states must be at least 50, got {m_states}")
    ucl = params.ucl
    if ucl <= 0:
        raise NumericError(f"control limit must be positive, got {ucl}")
    w = ucl / m_states
    centers = (np.arange(m_states) + 0.5) * w
    edges = np.arange(m_states + 1) * w
    means = params.lam * np.array([-1.0, 0.0, 1.0])
    sd = params.lam * params.sigma
    # F[i, j] = P(next <= edge_j | current = c_i), mixture over sign values
    x = edges[None, :, None] - means[None, None, :] - (1.0 - params.lam) * centers[:, None, None]
    f = (probs[None, None, :] * ndtr(x / sd)).sum(axis=2)
    q = np.diff(f, axis=1)
    q[:, 0] = f[:, 1]
    try:
        n = np.linalg.solve(np.eye(m_states) - q, np.ones(m_states))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"transient system is singular: {exc}") from exc
    arl = float(n[0])
    if not np.isfinite(arl) or arl < 1.0:
        raise NumericError(f"average run length computed as {arl}")
    return arl


def solve_kappa(
    target_arl0: float,
    lam: float,
    sigma: float = 0.125,
    probs=IN_CONTROL_SIGN_PROBS,
    m_states: int = 301,
    rel_tol: float = 0.005,
) -> float:
    """Bisection on kappa so the Markov ARL0 hits ``target_arl0``.

    The ARL is continuous and strictly increasing in kappa, so plain
    bisection on an expanding bracket converges; failure to bracket or
    to reach ``rel_tol`` raises :class:`NumericError`.
    """
    check_interval(target_arl0, "target_arl0", 1.0, low_open=True)
    check_interval(rel_tol, "rel_tol", 0.0, low_open=True)

    def arl_at(kappa: float) -> float:
        return markov_arl(EwmaParams(lam=lam, kappa=kappa, sigma=sigma), probs, m_states)

    lo, hi = 0.05, 4.0
    for _ in range(40):
        if arl_at(hi) >= target_arl0:
            break
        hi *= 1.5
    else:
        raise NumericError(f"could not bracket kappa for target ARL0 {target_arl0}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        arl = arl_at(mid)
        if abs(arl - target_arl0) / target_arl0 <= rel_tol:
            return mid
        if arl < target_arl0:
            lo = mid
        else:
            hi = mid
    raise NumericError(
        f"kappa search did not converge to within {rel_tol:.1%} of ARL0 {target_arl0}"
    )


def design_params(
    target_arl0: float,
    sigma: float = 0.125,
    lambda_grid: Sequence[float] = (0.05, 0.07, 0.1, 0.2),
    probs=IN_CONTROL_SIGN_PROBS,
    m_states: int = 301,
    rel_tol: float = 0.005,
) -> EwmaParams:
    """Smallest smoothing weight on the grid whose kappa solve succeeds.

    Small lam reacts fastest to sustained shifts of the sign statistic,
    so the grid is searched in increasing order and the first solvable
    design is returned.
    """
    if not lambda_grid:
        raise ConfigurationError("lambda_grid must not be empty")
    last_err: NumericError | None = None
    for lam in sorted(lambda_grid):
        check_interval(lam, "lam", 0.0, 1.0, low_open=True)
        try:
            kappa = solve_kappa(target_arl0, lam, sigma, probs, m_states, rel_tol)
        except NumericError as exc:
            last_err = exc
            continue
        return EwmaParams(lam=lam, kappa=kappa, sigma=sigma)
    raise NumericError(f"no lambda on the grid admits ARL0 {target_arl0}: {last_err}")


@dataclass(frozen=True)
class ArlEstimate:
    """Monte Carlo run-length summary: mean, spread, and precision."""

    arl: float
    sd_run_length: float
    se_arl: float
    replications: int


def monte_carlo_arl0(
    params: EwmaParams,
    probs=IN_CONTROL_SIGN_PROBS,
    replications: int = 10_000,
    random_state=None,
    max_steps: int = 1_000_000,
) -> ArlEstimate:
    """Direct simulation of zero-state in-control run lengths.

    All replications advance in lockstep as vectorized draws, dropping
    each chain once it signals. A chain still running after
    ``max_steps`` aborts the estimate rather than censoring it silently.
    """
    probs = check_probability_triple(probs)
    if replications < 100:
        raise ConfigurationError(f"replications must be at least 100, got {replications}")
    rng = as_generator(random_state)
    p_minus, p_zero, _ = probs
    z = np.zeros(replications)
    run_lengths = np.empty(replications, dtype=np.int64)
    done = 0
    for step in range(1, max_steps + 1):
        u = rng.random(z.size)
        s = np.where(u < p_minus, -1.0, np.where(u < p_minus + p_zero, 0.0, 1.0))
        s += params.sigma * rng.standard_normal(z.size)
        z = np.maximum(0.0, params.lam * s + (1.0 - params.lam) * z)
        signaled = z > params.ucl
        n_sig = int(signaled.sum())
        if n_sig:
            run_lengths[done : done + n_sig] = step
            done += n_sig
            z = z[~signaled]
            if z.size == 0:
                break
    else:
        raise NumericError(f"{z.size} chains still running after {max_steps} steps")
    rl = run_lengths.astype(np.float64)
    return ArlEstimate(
        arl=float(rl.mean()),
        sd_run_length=float(rl.std(ddof=1)),
        se_arl=float(rl.std(ddof=1) / np.sqrt(replications)),
        replications=replications,
    )


class EwmaTbeaChart(BaseEstimator):
    """Estimator wrapper: baseline estimation on fit, charting on call.

    ``fit`` accepts either the baseline events (with an optional
    explicit window) or ready-made :class:`Phase1Estimates`. ``transform``
    returns the chart trajectory for a monitored event stream, ``predict``
    the boolean signal mask, and :meth:`run` the full result including
    signal dates and turning points.

    Jitter draws restart from ``random_state`` on every call, so an
    integer seed makes repeated calls identical.
    """

    def __init__(
        self,
        lam: float = 0.07,
        kappa: float = 2.515,
        sigma: float = 0.125,
        tie_sign: int = -1,
        turning_tol: float = 0.05,
        random_state=None,
    ):
        self.lam = lam
        self.kappa = kappa
        self.sigma = sigma
        self.tie_sign = tie_sign
        self.turning_tol = turning_tol
        self.random_state = random_state

    def fit(self, X, y=None, window: tuple[date, date] | None = None):
        """Estimate baselines from events ``X`` (or adopt estimates)."""
        _check_tie_sign(self.tie_sign)
        self.params_ = EwmaParams(lam=self.lam, kappa=self.kappa, sigma=self.sigma)
        if isinstance(X, Phase1Estimates):
            self.estimates_ = X
        else:
            events = list(X)
            if window is None:
                if not events:
                    raise DataError("cannot fit on an empty event sequence")
                window = (events[0].month, events[-1].month)
            self.estimates_ = estimate_phase1(events, window)
        return self

    def run(self, X) -> EwmaRunResult:
        """Full chart run over monitored events ``X``."""
        check_is_fitted(self)
        return run_chart(
            list(X),
            self.estimates_,
            self.params_,
            random_state=self.random_state,
            tie_sign=self.tie_sign,
            turning_tol=self.turning_tol,
        )

    def transform(self, X) -> np.ndarray:
        """Chart trajectory (one smoothed value per monitored event)."""
        return self.run(X).z_star

    def predict(self, X) -> np.ndarray:
        """Boolean signal mask over monitored events ``X``."""
        result = self.run(X)
        return result.z_star > result.ucl
