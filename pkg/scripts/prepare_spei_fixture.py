"""Prepare the Bologna SPEI test fixtures from SPEIbase netCDF files.

The case-study tests want monthly SPEI-12 and SPEI-24 series for the
grid cell covering Bologna (44.4949 N, 11.3426 E). The source data are
public but too large to vendor (the global SPEIbase v2.9 archive), so
this script extracts the two single-cell series locally:

1. Download ``spei12.nc`` and ``spei24.nc`` from the Global SPEI
   database, https://spei.csic.es/database.html (SPEIbase v2.9, 0.5
   degree resolution, 1901-2022).
2. Run::

       python scripts/prepare_spei_fixture.py spei12.nc spei24.nc

   which writes ``tests/fixtures/spei12_bologna.csv`` and
   ``tests/fixtures/spei24_bologna.csv`` (format: ``date,value`` with
   ``YYYY-MM`` months).

Leading months where the accumulation window is still incomplete (NaN
in the source) are dropped, so the SPEI-12 series starts 1901-12. The
fixture-dependent tests skip themselves while these files are absent.
"""

from __future__ import annotations

import argparse
import sys
from datetime import date, timedelta
from pathlib import Path

import h5py
import numpy as np

BOLOGNA_LAT = 44.4949
BOLOGNA_LON = 11.3426


def _months_from_time(time_var) -> list[str]:
    """Month labels from a CF 'days since <origin>' time variable."""
    units = time_var.attrs.get("units", b"").decode() if isinstance(
        time_var.attrs.get("units", b""), bytes
    ) else str(time_var.attrs.get("units", ""))
    prefix = "days since "
    if not units.startswith(prefix):
        raise SystemExit(f"unsupported time units: {units!r}")
    origin = date.fromisoformat(units[len(prefix):].split()[0].replace("-1-", "-01-"))
    days = np.asarray(time_var[...], dtype=np.float64)
    return [(origin + timedelta(days=float(d))).strftime("%Y-%m") for d in days]


def extract_cell(nc_path: Path, lat: float, lon: float) -> tuple[list[str], np.ndarray]:
    with h5py.File(nc_path, "r") as nc:
        lats = np.asarray(nc["lat"][...], dtype=np.float64)
        lons = np.asarray(nc["lon"][...], dtype=np.float64)
        i = int(np.argmin(np.abs(lats - lat)))
        j = int(np.argmin(np.abs(lons - lon)))
        var = nc["spei"]
        vals = np.asarray(var[:, i, j], dtype=np.float64)
        fill = var.attrs.get("_FillValue")
        if fill is not None:
            vals[vals == np.asarray(fill, dtype=np.float64)] = np.nan
        months = _months_from_time(nc["time"])
        print(f"{nc_path.name}: cell lat={lats[i]:.2f} lon={lons[j]:.2f}")
    return months, vals


def write_fixture(months: list[str], vals: np.ndarray, out: Path) -> None:
    valid = np.flatnonzero(np.isfinite(vals))
    if valid.size == 0:
        raise SystemExit(f"{out.name}: no finite values at this cell")
    start = int(valid[0])
    tail = vals[start:]
    if not np.all(np.isfinite(tail)):
        raise SystemExit(f"{out.name}: interior gaps in the series")
    lines = ["date,value"]
    lines += [f"{m},{v:.4f}" for m, v in zip(months[start:], tail)]
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out} ({tail.size} observations, {months[start]}..{months[-1]})")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("spei12", type=Path, help="SPEIbase spei12.nc")
    parser.add_argument("spei24", type=Path, nargs="?", default=None,
                        help="SPEIbase spei24.nc (optional)")
    parser.add_argument("--lat", type=float, default=BOLOGNA_LAT)
    parser.add_argument("--lon", type=float, default=BOLOGNA_LON)
    parser.add_argument("--out-dir", type=Path,
                        default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    args = parser.parse_args(argv)

    months, vals = extract_cell(args.spei12, args.lat, args.lon)
    write_fixture(months, vals, args.out_dir / "spei12_bologna.csv")
    if args.spei24 is not None:
        months, vals = extract_cell(args.spei24, args.lat, args.lon)
        write_fixture(months, vals, args.out_dir / "spei24_bologna.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
