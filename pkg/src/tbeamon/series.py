"""Monthly index series ingestion, summaries, and event extraction.

The input format is a UTF-8 CSV stream with a ``date,value`` header,
one row per month (``YYYY-MM,<decimal>``), and ``#`` comment lines.
Months must be consecutive: the series carries one value per calendar
month with no gaps or duplicates, so internally a series is stored as a
start month plus a dense value array.

An *event* is a month whose index value lies at or below a (negative)
threshold. Its amplitude is the magnitude of the value, and its gap is
the number of months elapsed since the previous event. The first event
of a series has no gap.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Iterator

import numpy as np

from ._validation import check_interval
from .errors import DataError

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})(?:-(\d{2}))?$")


def month_index(month: date) -> int:
    """Number of months since 0001-01 (an integer month clock)."""
    return month.year * 12 + (month.month - 1)


def month_from_index(index: int) -> date:
    """Inverse of :func:`month_index`."""
    year, m = divmod(index, 12)
    return date(year, m + 1, 1)


def parse_month(text: str, line_no: int | None = None) -> date:
    """Parse ``YYYY-MM`` (or ``YYYY-MM-01``) into a first-of-month date.

    Dates carrying a day other than the first are rejected: the series
    is monthly and sub-monthly stamps would be silently ambiguous.
    """
    where = f"line {line_no}: " if line_no is not None else ""
    m = _MONTH_RE.match(text.strip())
    if m is None:
        raise DataError(f"{where}expected date formatted YYYY-MM, got {text!r}")
    year, month, day = int(m.group(1)), int(m.group(2)), m.group(3)
    if not 1 <= month <= 12:
        raise DataError(f"{where}month out of range in {text!r}")
    if day is not None and int(day) != 1:
        raise DataError(f"{where}sub-monthly date {text!r}; supply one value per month")
    return date(year, month, 1)


def format_month(month: date) -> str:
    return f"{month.year:04d}-{month.month:02d}"


@dataclass(frozen=True)
class IndexSeries:
    """A gap-free monthly series of finite index values."""

    start: date
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise DataError("series must hold at least one monthly value")
        if not np.all(np.isfinite(values)):
            raise DataError("series values must be finite")
        if self.start.day != 1:
            raise DataError("series start must be a first-of-month date")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> date:
        return month_from_index(month_index(self.start) + len(self) - 1)

    def month_at(self, i: int) -> date:
        if not 0 <= i < len(self):
            raise IndexError(f"position {i} outside series of length {len(self)}")
        return month_from_index(month_index(self.start) + i)

    def position_of(self, month: date) -> int:
        pos = month_index(month) - month_index(self.start)
        if not 0 <= pos < len(self):
            raise DataError(
                f"month {format_month(month)} outside series span "
                f"{format_month(self.start)}..{format_month(self.end)}"
            )
        return pos

    def entries(self) -> Iterator[tuple[date, float]]:
        base = month_index(self.start)
        for i, v in enumerate(self.values):
            yield month_from_index(base + i), float(v)


@dataclass(frozen=True)
class SummaryStats:
    """Location and spread summary of a series (sample variance, n-1)."""

    minimum: float
    first_quartile: float
    median: float
    mean: float
    third_quartile: float
    maximum: float
    variance: float

    def as_dict(self) -> dict[str, float]:
        return {
            "min": self.minimum,
            "first_quartile": self.first_quartile,
            "median": self.median,
            "mean": self.mean,
            "third_quartile": self.third_quartile,
            "max": self.maximum,
            "variance": self.variance,
        }


@dataclass(frozen=True)
class EventRecord:
    """One threshold-crossing month.

    ``ordinal`` counts events from 1 in series order. ``gap_months`` is
    the month distance to the previous event, ``None`` for the first.
    """

    ordinal: int
    month: date
    amplitude: float
    gap_months: int | None


def parse_series(source: str | Iterable[str]) -> IndexSeries:
    """Parse the ``date,value`` CSV format into an :class:`IndexSeries`.

    ``source`` is either the full text or an iterable of lines (an open
    file works). Lines starting with ``#`` and blank lines are skipped.
    Errors mention the 1-based physical line number.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    series_start: date | None = None
    prev_idx: int | None = None
    values: list[float] = []
    header_seen = False
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if [f.strip() for f in line.split(",")] != ["date", "value"]:
                raise DataError(f"line {line_no}: expected header 'date,value', got {line!r}")
            header_seen = True
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise DataError(f"line {line_no}: expected 2 fields, got {len(fields)}")
        month = parse_month(fields[0], line_no)
        try:
            value = float(fields[1])
        except ValueError:
            raise DataError(f"line {line_no}: value {fields[1]!r} is not a number") from None
        if not np.isfinite(value):
            raise DataError(f"line {line_no}: value must be finite, got {fields[1]!r}")
        idx = month_index(month)
        if prev_idx is not None and idx != prev_idx + 1:
            kind = "duplicate or out-of-order" if idx <= prev_idx else "gap before"
            raise DataError(f"line {line_no}: {kind} month {format_month(month)}")
        if series_start is None:
            series_start = month
        prev_idx = idx
        values.append(value)
    if not header_seen:
        raise DataError("input has no 'date,value' header")
    if series_start is None:
        raise DataError("input has no data rows")
    return IndexSeries(series_start, np.array(values))


def describe(series: IndexSeries) -> SummaryStats:
    """Summary statistics; quartiles use linear interpolation.

    The variance uses the n-1 denominator and is reported as 0 for a
    single observation.
    """
    v = series.values
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    variance = float(np.var(v, ddof=1)) if v.size > 1 else 0.0
    return SummaryStats(
        minimum=float(v.min()),
        first_quartile=float(q1),
        median=float(med),
        mean=float(v.mean()),
        third_quartile=float(q3),
        maximum=float(v.max()),
        variance=variance,
    )


def extract_events(series: IndexSeries, threshold: float = -1.0) -> list[EventRecord]:
    """Return the months with ``value <= threshold`` as events.

    The threshold must be negative so that amplitudes (absolute values)
    measure how far the index fell. Consecutive event months are kept as
    distinct events with gap 1; runs are not merged.
    """
    check_interval(threshold, "threshold", high=0.0, high_open=True)
    positions = np.nonzero(series.values <= threshold)[0]
    base = month_index(series.start)
    events: list[EventRecord] = []
    for ordinal, pos in enumerate(positions, start=1):
        gap = int(pos - positions[ordinal - 2]) if ordinal > 1 else None
        events.append(
            EventRecord(
                ordinal=ordinal,
                month=month_from_index(base + int(pos)),
                amplitude=float(abs(series.values[pos])),
                gap_months=gap,
            )
        )
    return events


def slice_window(series: IndexSeries, start: date, end: date) -> IndexSeries:
    """Inclusive sub-series between two months, both within the span."""
    if month_index(start) > month_index(end):
        raise DataError(f"window start {format_month(start)} is after end {format_month(end)}")
    i = series.position_of(start)
    j = series.position_of(end)
    return IndexSeries(start, series.values[i : j + 1].copy())


def events_as_dicts(events: Iterable[EventRecord]) -> list[dict]:
    """JSON-ready rows: ordinal, date (YYYY-MM), amplitude, gap_months."""
    return [
        {
            "ordinal": e.ordinal,
            "date": format_month(e.month),
            "amplitude": e.amplitude,
            "gap_months": e.gap_months,
        }
        for e in events
    ]
