"""Event coincidence analysis on integer month clocks.

Quantifies how often events of type A are preceded by (or simultaneous
with) an event of type B: A-event at month a counts as coincident when
some B-event at month b satisfies 0 <= (a - tau) - b <= delta_t. The
precursor rate is the coincident fraction of A-events.

Significance is judged against the conditional null of independent,
uniformly placed event sets: surrogates redraw both sets over the
observation span keeping the observed counts, and the p-value is the
(continuity-corrected) fraction of surrogates whose coincident count
reaches the observed one. Exact month arithmetic throughout; no
tolerance windows beyond the integer delta_t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import as_generator
from .errors import ConfigurationError, DataError


@dataclass(frozen=True)
class EcaInput:
    """Two sorted integer event-time sets within an observation span."""

    a_times: tuple[int, ...]
    b_times: tuple[int, ...]
    delta_t: int
    tau: int
    observation_span: tuple[int, int]

    def __post_init__(self) -> None:
        a = tuple(int(t) for t in self.a_times)
        b = tuple(int(t) for t in self.b_times)
        object.__setattr__(self, "a_times", a)
        object.__setattr__(self, "b_times", b)
        if not a or not b:
            raise DataError("both event sets must be non-empty")
        lo, hi = self.observation_span
        if lo > hi:
            raise DataError(f"observation span {self.observation_span} is empty")
        for name, times in (("a_times", a), ("b_times", b)):
            if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
                raise DataError(f"{name} must be strictly increasing, got {times}")
            if times[0] < lo or times[-1] > hi:
                raise DataError(f"{name} falls outside the observation span {self.observation_span}")
        if self.delta_t < 0:
            raise ConfigurationError(f"delta_t must be >= 0, got {self.delta_t}")
        if self.tau < 0:
            raise ConfigurationError(f"tau must be >= 0, got {self.tau}")


@dataclass(frozen=True)
class EcaResult:
    """Precursor rate with its Monte Carlo significance."""

    rp: float
    coincident_count: int
    p_value: float
    replications: int


def _coincident_count(a: np.ndarray, b_sorted: np.ndarray, delta_t: int, tau: int) -> int:
    """A-events with some b in [a - tau - delta_t, a - tau]."""
    target = a - tau
    # nearest b at or below a - tau; coincident when within delta_t
    pos = np.searchsorted(b_sorted, target, side="right") - 1
    ok = pos >= 0
    ok[ok] = target[ok] - b_sorted[pos[ok]] <= delta_t
    return int(ok.sum())


def precursor_rate(inp: EcaInput) -> tuple[float, int]:
    """Fraction of A-events preceded by a B-event within the window."""
    a = np.asarray(inp.a_times, dtype=np.int64)
    b = np.asarray(inp.b_times, dtype=np.int64)
    count = _coincident_count(a, b, inp.delta_t, inp.tau)
    return count / a.size, count


def eca_significance(inp: EcaInput, replications: int = 10_000, random_state=None) -> float:
    """Monte Carlo p-value of the observed coincident count.

    Surrogate event sets are distinct months drawn uniformly over the
    span (the conditional view of independent Poisson processes given
    their counts). The +1/(R+1) correction keeps the p-value positive.
    """
    if replications < 1000:
        raise ConfigurationError(f"need at least 1000 replications, got {replications}")
    lo, hi = inp.observation_span
    span_months = hi - lo + 1
    if span_months <= inp.delta_t:
        raise DataError(
            f"observation span of {span_months} months is degenerate for delta_t={inp.delta_t}"
        )
    n_a, n_b = len(inp.a_times), len(inp.b_times)
    rng = as_generator(random_state)
    _, observed = precursor_rate(inp)
    hits = 0
    for _ in range(replications):
        a_s = np.sort(rng.choice(span_months, size=n_a, replace=False))
        b_s = np.sort(rng.choice(span_months, size=n_b, replace=False))
        if _coincident_count(a_s, b_s, inp.delta_t, inp.tau) >= observed:
            hits += 1
    return (hits + 1) / (replications + 1)


def eca_table(
    a_times: Sequence[int],
    b_times: Sequence[int],
    delta_t_range: Sequence[int],
    tau: int = 0,
    replications: int = 10_000,
    random_state=None,
    *,
    span: tuple[int, int],
) -> list[EcaResult]:
    """Precursor rate and significance for each tolerance in the range.

    The observation span must be passed explicitly: it defines the
    surrogate null and is generally wider than the event range.
    """
    if len(delta_t_range) == 0:
        raise ConfigurationError("delta_t_range must not be empty")
    rng = as_generator(random_state)
    out = []
    for dt in delta_t_range:
        inp = EcaInput(
            a_times=tuple(a_times),
            b_times=tuple(b_times),
            delta_t=int(dt),
            tau=tau,
            observation_span=span,
        )
        rp, count = precursor_rate(inp)
        p = eca_significance(inp, replications, rng)
        out.append(EcaResult(rp=rp, coincident_count=count, p_value=p, replications=replications))
    return out
