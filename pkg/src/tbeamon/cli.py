"""Command line interface.

Four subcommands cover the workflow: ``describe`` summarizes a series,
``pipeline`` runs the full event analysis into an output folder,
``simulate`` benchmarks the charts on synthetic streams, ``calibrate``
builds a change-point threshold table. All output is deterministic
given the inputs, the flags and ``--seed``; nothing is ever written to
the input file.

Exit codes: 0 success, 1 configuration or usage error, 2 bad input
data, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .changepoint import calibrate_thresholds
from .errors import TbeaError
from .ewma import solve_kappa
from .pipeline import PipelineConfig, run_pipeline
from .series import describe, extract_events, parse_month, parse_series
from .simulate import SimConfig, run_simulation

PUBLISHED_KAPPA = 2.515


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _month(text: str):
    try:
        return parse_month(text)
    except TbeaError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_series_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="series CSV (date,value)")
    p.add_argument("--threshold", type=float, default=-1.0,
                   help="event threshold, must be negative (default -1.0)")


def _add_chart_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--detector", action="append", choices=("ewma", "ks", "mw"),
                   help="chart to run; repeatable, default: all three")
    p.add_argument("--lambda", dest="lam", type=float, default=0.07,
                   help="EWMA smoothing weight (default 0.07)")
    p.add_argument("--kappa", type=float, default=None,
                   help="EWMA limit multiplier (default: published 2.515, "
                        "or solved from --arl0 when that is given)")
    p.add_argument("--arl0", type=float, default=None,
                   help="solve the limit multiplier for this in-control ARL "
                        "(ignored when --kappa is given)")
    p.add_argument("--sigma", type=float, default=0.125,
                   help="jitter scale of the sign statistic (default 0.125)")
    p.add_argument("--tie-sign", type=int, choices=(-1, 1), default=-1,
                   help="sign given to exact median ties (default -1)")
    p.add_argument("--alpha", type=float, default=0.0027,
                   help="per-test alarm rate of the change-point charts")
    p.add_argument("--burn-in", type=int, default=20,
                   help="window size before change-point testing starts")
    p.add_argument("--seed", type=int, default=None, help="random seed")


def _resolve_kappa(args) -> float:
    if args.kappa is not None:
        return args.kappa
    if args.arl0 is not None:
        return solve_kappa(args.arl0, lam=args.lam, sigma=args.sigma)
    return PUBLISHED_KAPPA


def _read_series(path: str):
    return parse_series(Path(path).read_text(encoding="utf-8"))


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _cmd_describe(args) -> int:
    series = _read_series(args.input)
    events = extract_events(series, args.threshold)
    payload = {
        "start": series.start.strftime("%Y-%m"),
        "end": series.end.strftime("%Y-%m"),
        "observations": len(series),
        "events": len(events),
        "threshold": args.threshold,
        **describe(series).as_dict(),
    }
    if args.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        keys = list(payload)
        vals = [str(payload[k]) for k in keys]
        text = ",".join(keys) + "\n" + ",".join(vals) + "\n"
    _emit(text, args.out)
    return 0


def _pipeline_tables(args, detectors) -> dict | None:
    """On-the-fly tables for --calibrate; None lets the packaged ones load."""
    if not args.calibrate:
        return None
    tables = {}
    for det in detectors:
        if det == "ewma":
            continue
        kwargs = {}
        if det == "ks":
            kwargs["moments_replications"] = args.moments_reps
        tables[det] = calibrate_thresholds(
            det, alpha=args.alpha, burn_in=args.burn_in, n_max=args.n_max,
            replications=args.calibration_reps, random_state=args.seed, **kwargs,
        )
    return tables


def _cmd_pipeline(args) -> int:
    series = _read_series(args.input)
    detectors = tuple(args.detector) if args.detector else ("ewma", "ks", "mw")
    config = PipelineConfig(
        threshold=args.threshold,
        detectors=detectors,
        lam=args.lam,
        kappa=_resolve_kappa(args),
        sigma=args.sigma,
        tie_sign=args.tie_sign,
        turning_tol=args.turning_tol,
        alpha=args.alpha,
        burn_in=args.burn_in,
        restart=args.restart,
        eca_delta_t_max=args.eca_delta_t_max,
        eca_replications=args.eca_reps,
        seed=args.seed,
    )
    tables = _pipeline_tables(args, detectors)
    result = run_pipeline(
        series, (args.phase1_start, args.phase1_end), config, tables=tables
    )
    manifest = result.write(args.out)
    for entry in manifest["files"]:
        sys.stdout.write(f"wrote {Path(args.out) / entry['name']}\n")
    sys.stdout.write(f"wrote {Path(args.out) / 'manifest.json'}\n")
    return 0


def _cmd_simulate(args) -> int:
    detectors = tuple(args.detector) if args.detector else ("ewma", "ks", "mw")
    cfg = SimConfig(
        delta=args.delta,
        replications=args.reps,
        phase1_length=args.phase1_length,
        monitor_length=args.monitor_length,
        mu0=args.mu0,
        sigma0=args.sigma0,
        event_threshold=args.threshold,
        detectors=detectors,
        lam=args.lam,
        kappa=_resolve_kappa(args),
        sigma=args.sigma,
        tie_sign=args.tie_sign,
        alpha=args.alpha,
        burn_in=args.burn_in,
        restart=args.restart,
        seed=args.seed,
    )
    result = run_simulation(cfg, n_jobs=args.jobs)
    if args.out is None:
        if args.format == "json":
            sys.stdout.write(json.dumps(result.as_dict(), indent=2, sort_keys=True) + "\n")
        else:
            import tempfile
            with tempfile.NamedTemporaryFile("r", suffix=".csv") as tmp:
                result.write_csv(tmp.name)
                sys.stdout.write(Path(tmp.name).read_text(encoding="utf-8"))
    elif args.format == "json":
        result.write_json(args.out)
    else:
        result.write_csv(args.out)
    return 0


def _cmd_calibrate(args) -> int:
    kwargs = {}
    if args.detector == "ks":
        kwargs["moments_replications"] = args.moments_reps
    table = calibrate_thresholds(
        args.detector,
        alpha=args.alpha,
        burn_in=args.burn_in,
        n_max=args.n_max,
        replications=args.reps,
        random_state=args.seed,
        **kwargs,
    )
    table.save(args.out)
    sys.stdout.write(f"wrote {args.out}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tbeamon", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", parents=[], help="summarize a series",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_series_args(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=_cmd_describe)

    p = sub.add_parser("pipeline", help="full analysis of one series",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_series_args(p)
    _add_chart_args(p)
    p.add_argument("--phase1-start", type=_month, required=True,
                   help="baseline window start (YYYY-MM)")
    p.add_argument("--phase1-end", type=_month, required=True,
                   help="baseline window end (YYYY-MM), inclusive")
    p.add_argument("--restart", choices=("after_tau", "after_detection"),
                   default="after_tau",
                   help="window handling after a change-point alarm")
    p.add_argument("--turning-tol", type=float, default=0.05,
                   help="prominence for EWMA renewed-climb months")
    p.add_argument("--eca-delta-t-max", type=int, default=5,
                   help="largest coincidence tolerance in months")
    p.add_argument("--eca-reps", type=int, default=10_000,
                   help="surrogate replications for coincidence p-values")
    p.add_argument("--calibrate", action="store_true",
                   help="calibrate threshold tables on the fly instead of "
                        "requiring packaged ones")
    p.add_argument("--n-max", type=int, default=500,
                   help="largest calibrated window size (with --calibrate)")
    p.add_argument("--calibration-reps", type=int, default=20_000,
                   help="null streams per table (with --calibrate)")
    p.add_argument("--moments-reps", type=int, default=10_000,
                   help="null streams for KS moments (with --calibrate)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("simulate", help="synthetic benchmark of the charts",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_chart_args(p)
    p.add_argument("--delta", type=float, required=True,
                   help="mean shift in baseline standard deviations "
                        "(0 measures false alarms)")
    p.add_argument("--reps", type=int, required=True, help="replications")
    p.add_argument("--phase1-length", type=int, default=500,
                   help="baseline segment length in months")
    p.add_argument("--monitor-length", type=int, default=1000,
                   help="monitoring segment length in months")
    p.add_argument("--mu0", type=float, default=0.2082,
                   help="baseline mean of the synthetic index")
    p.add_argument("--sigma0", type=float, default=0.9213,
                   help="baseline standard deviation of the synthetic index")
    p.add_argument("--threshold", type=float, default=-1.0,
                   help="event threshold, must be negative")
    p.add_argument("--restart", choices=("after_tau", "after_detection"),
                   default=None,
                   help="window handling after an alarm (default: after_tau "
                        "for detection runs, after_detection for delta=0)")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes (-1: all cores)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="report file (default: stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="build a change-point threshold table",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--detector", choices=("ks", "mw"), required=True)
    p.add_argument("--alpha", type=float, default=0.0027)
    p.add_argument("--burn-in", type=int, default=20)
    p.add_argument("--n-max", type=int, default=500,
                   help="largest calibrated window size")
    p.add_argument("--reps", type=int, default=20_000, help="null streams")
    p.add_argument("--moments-reps", type=int, default=10_000,
                   help="null streams for KS moments")
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--out", required=True, help="table CSV path")
    p.set_defaults(func=_cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TbeaError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
