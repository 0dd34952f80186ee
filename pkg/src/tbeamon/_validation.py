"""Input validation helpers used across estimators and functions."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DataError


def as_generator(random_state) -> np.random.Generator:
    """Coerce ``random_state`` into a ``numpy.random.Generator``.

    Accepts ``None`` (fresh entropy), an integer seed, a ``SeedSequence``,
    or an existing ``Generator`` (returned unchanged).
    """
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, (int, np.integer, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    raise ConfigurationError(
        f"random_state must be None, an int, a SeedSequence, or a Generator, "
        f"got {type(random_state).__name__}"
    )


def as_float_array(values, name: str = "values") -> np.ndarray:
    """Return a 1-d contiguous float64 array, rejecting NaN and infinity."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return arr


def check_interval(
    value: float,
    name: str,
    low: float | None = None,
    high: float | None = None,
    *,
    low_open: bool = False,
    high_open: bool = False,
) -> float:
    """Validate that ``value`` lies in the given interval.

    Raises :class:`ConfigurationError` describing the violated bound.
    """
    value = float(value)
    if not np.isfinite(value):
        raise ConfigurationError(f"{name} must be finite, got {value}")
    if low is not None and (value <= low if low_open else value < low):
        op = ">" if low_open else ">="
        raise ConfigurationError(f"{name} must be {op} {low}, got {value}")
    if high is not None and (value >= high if high_open else value > high):
        op = "<" if high_open else "<="
        raise ConfigurationError(f"{name} must be {op} {high}, got {value}")
    return value


def check_choice(value: str, name: str, allowed: Sequence[str]) -> str:
    """Validate that ``value`` is one of ``allowed``."""
    if value not in allowed:
        raise ConfigurationError(
            f"{name} must be one of {', '.join(repr(a) for a in allowed)}, got {value!r}"
        )
    return value


def check_probability_triple(probs) -> np.ndarray:
    """Validate a length-3 probability vector (sign values -1, 0, +1)."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.shape != (3,):
        raise ConfigurationError(f"probabilities must have length 3, got shape {arr.shape}")
    if np.any(arr < 0) or not np.isclose(arr.sum(), 1.0, atol=1e-9):
        raise ConfigurationError(f"probabilities must be non-negative and sum to 1, got {arr}")
    return arr
