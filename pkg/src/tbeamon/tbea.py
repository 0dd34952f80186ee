"""Event-stream normalization for time-between-events-and-amplitude charts.

A baseline window of historical events yields location estimates for the
gap T (months between events) and the amplitude X: medians feed the sign
chart, means feed the ratio statistic used by the change-point charts.
Events arriving afterwards are normalized against those baselines.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .series import EventRecord, format_month, month_index


@dataclass(frozen=True)
class Phase1Estimates:
    """Baseline location estimates from a fixed historical window.

    ``theta_t0``/``theta_x0`` are the in-window medians of gap and
    amplitude, ``mu_t0``/``mu_x0`` the corresponding means. ``n_events``
    counts the window's events (the first event of the series carries no
    gap and contributes to the amplitude sample only).
    """

    theta_t0: float
    theta_x0: float
    mu_t0: float
    mu_x0: float
    n_events: int
    window_start: date
    window_end: date

    def __post_init__(self) -> None:
        if self.n_events < 2:
            raise DataError("baseline estimates need at least 2 events")
        if not (self.theta_t0 >= 1 and self.mu_t0 > 0):
            raise DataError(f"gap baseline must be positive months, got median {self.theta_t0}")
        if not (self.theta_x0 > 0 and self.mu_x0 > 0):
            raise DataError(f"amplitude baseline must be positive, got median {self.theta_x0}")

    def as_dict(self) -> dict:
        return {
            "theta_T0": self.theta_t0,
            "theta_X0": self.theta_x0,
            "mu_T0": self.mu_t0,
            "mu_X0": self.mu_x0,
            "n_events": self.n_events,
            "window_start": format_month(self.window_start),
            "window_end": format_month(self.window_end),
        }


@dataclass(frozen=True)
class TbeaPoint:
    """One normalized event: gap ratio, amplitude ratio, and their ratio.

    ``z_ratio = x_norm / t_norm`` grows when events come faster (small
    ``t_norm``) or stronger (large ``x_norm``) than the baseline.
    """

    t_norm: float
    x_norm: float
    z_ratio: float


def estimate_phase1(
    events: Sequence[EventRecord],
    window: tuple[date, date],
) -> Phase1Estimates:
    """Estimate gap/amplitude baselines from events inside ``window``.

    Both window ends are inclusive. At least two in-window events must
    carry a gap, otherwise the medians of T are meaningless.
    """
    start, end = window
    if month_index(start) > month_index(end):
        raise DataError(f"window start {format_month(start)} is after end {format_month(end)}")
    inside = [e for e in events if month_index(start) <= month_index(e.month) <= month_index(end)]
    gaps = np.array([e.gap_months for e in inside if e.gap_months is not None], dtype=np.float64)
    amps = np.array([e.amplitude for e in inside], dtype=np.float64)
    if gaps.size < 2:
        raise DataError(
            f"baseline window {format_month(start)}..{format_month(end)} holds "
            f"{gaps.size} events with gaps; need at least 2"
        )
    return Phase1Estimates(
        theta_t0=float(np.median(gaps)),
        theta_x0=float(np.median(amps)),
        mu_t0=float(gaps.mean()),
        mu_x0=float(amps.mean()),
        n_events=len(inside),
        window_start=start,
        window_end=end,
    )


def normalize(event: EventRecord, estimates: Phase1Estimates) -> TbeaPoint:
    """Normalize one event against the baseline means.

    The event must carry a gap; the first event of a series does not and
    cannot be placed on the T scale.
    """
    if event.gap_months is None:
        raise DataError(f"event at {format_month(event.month)} has no gap; cannot normalize")
    t_norm = event.gap_months / estimates.mu_t0
    x_norm = event.amplitude / estimates.mu_x0
    return TbeaPoint(t_norm=t_norm, x_norm=x_norm, z_ratio=x_norm / t_norm)


def z_alternatives(point: TbeaPoint) -> tuple[float, float]:
    """Difference and penalty variants of the combined statistic.

    Returns ``(x_norm - t_norm, x_norm + 1 / t_norm)``. Both respond in
    the same direction as the ratio form; they are provided for
    sensitivity comparisons, not used by the default charts.
    """
    return point.x_norm - point.t_norm, point.x_norm + 1.0 / point.t_norm


def events_with_gaps(events: Iterable[EventRecord]) -> list[EventRecord]:
    """Drop events that carry no gap (at most the first of a series)."""
    return [e for e in events if e.gap_months is not None]


def ratio_stream(
    events: Sequence[EventRecord],
    estimates: Phase1Estimates,
) -> tuple[list[date], np.ndarray]:
    """Event months and their ``z_ratio`` values, skipping gap-less events."""
    usable = events_with_gaps(events)
    months = [e.month for e in usable]
    z = np.array([normalize(e, estimates).z_ratio for e in usable], dtype=np.float64)
    return months, z
