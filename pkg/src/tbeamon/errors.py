"""Exception hierarchy shared across the package.

Every error raised by the library derives from :class:`TbeaError` so that
callers (notably the command line interface) can map failures onto process
exit codes without matching on message text.
"""

from __future__ import annotations


class TbeaError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigurationError(TbeaError):
    """A parameter, option, or combination of options is invalid."""

    exit_code = 1


class DataError(TbeaError):
    """Input data is malformed, inconsistent, or insufficient."""

    exit_code = 2


class NumericError(TbeaError):
    """A numerical routine failed to produce a usable result."""

    exit_code = 3


class CalibrationError(ConfigurationError):
    """Monte Carlo calibration could not be completed as requested."""
