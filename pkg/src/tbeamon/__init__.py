"""Sequential monitoring of threshold-crossing events in monthly index series.

The package watches a standardized climate index for changes in how often
events (months at or below a deficit threshold) occur and how strong they
are. It provides:

- event extraction and baseline (Phase 1) estimation from a historical
  window (:mod:`tbeamon.series`, :mod:`tbeamon.tbea`);
- a distribution-free EWMA chart on per-event gap/amplitude sign
  statistics (:mod:`tbeamon.ewma`);
- sequential nonparametric change-point charts (rank and ECDF based) on
  the normalized amplitude-to-gap ratio, with Monte Carlo calibrated
  thresholds (:mod:`tbeamon.changepoint`);
- event coincidence analysis linking detected change points to chart
  turning points (:mod:`tbeamon.eca`);
- a simulation harness reproducing the published operating
  characteristics (:mod:`tbeamon.simulate`);
- an end-to-end pipeline and command line interface
  (:mod:`tbeamon.pipeline`, :mod:`tbeamon.cli`).
"""

__version__ = "0.1.0"

from .changepoint import (
    ChangePointDetection,
    ChangePointMonitor,
    HazardReport,
    KsNullMoments,
    MonitorRun,
    ThresholdTable,
    calibrate_thresholds,
    default_table,
    estimate_ks_null_moments,
    ks_d,
    ks_tmax,
    monitor,
    monitor_run,
    mw_tmax,
    mw_u,
    resolve_tables,
    segment_means,
    validate_table,
)
from .eca import EcaInput, EcaResult, eca_significance, eca_table, precursor_rate
from .errors import (
    CalibrationError,
    ConfigurationError,
    DataError,
    NumericError,
    TbeaError,
)
from .pipeline import DatedDetection, PipelineConfig, PipelineResult, run_pipeline
from .simulate import (
    SimConfig,
    SimReport,
    SimResult,
    run_simulation,
    simulate_in_control,
    simulate_out_of_control,
)
from .series import (
    EventRecord,
    IndexSeries,
    SummaryStats,
    describe,
    extract_events,
    parse_series,
    slice_window,
)
from .tbea import (
    Phase1Estimates,
    TbeaPoint,
    estimate_phase1,
    normalize,
    ratio_stream,
    z_alternatives,
)
from .ewma import (
    EwmaParams,
    EwmaRunResult,
    EwmaState,
    EwmaTbeaChart,
    SignTriple,
    chart_limit,
    continuousify,
    design_params,
    ewma_update,
    markov_arl,
    monte_carlo_arl0,
    run_chart,
    sign_stats,
    solve_kappa,
    turning_points,
)

__all__ = [
    "CalibrationError",
    "ConfigurationError",
    "DataError",
    "NumericError",
    "TbeaError",
    "ChangePointDetection",
    "ChangePointMonitor",
    "HazardReport",
    "KsNullMoments",
    "MonitorRun",
    "ThresholdTable",
    "calibrate_thresholds",
    "default_table",
    "estimate_ks_null_moments",
    "ks_d",
    "ks_tmax",
    "monitor",
    "monitor_run",
    "mw_tmax",
    "mw_u",
    "resolve_tables",
    "segment_means",
    "validate_table",
    "EcaInput",
    "EcaResult",
    "eca_significance",
    "eca_table",
    "precursor_rate",
    "DatedDetection",
    "PipelineConfig",
    "PipelineResult",
    "run_pipeline",
    "SimConfig",
    "SimReport",
    "SimResult",
    "run_simulation",
    "simulate_in_control",
    "simulate_out_of_control",
    "EventRecord",
    "IndexSeries",
    "SummaryStats",
    "describe",
    "extract_events",
    "parse_series",
    "slice_window",
    "Phase1Estimates",
    "TbeaPoint",
    "estimate_phase1",
    "normalize",
    "ratio_stream",
    "z_alternatives",
    "EwmaParams",
    "EwmaRunResult",
    "EwmaState",
    "EwmaTbeaChart",
    "SignTriple",
    "chart_limit",
    "continuousify",
    "design_params",
    "ewma_update",
    "markov_arl",
    "monte_carlo_arl0",
    "run_chart",
    "sign_stats",
    "solve_kappa",
    "turning_points",
    "__version__",
]
