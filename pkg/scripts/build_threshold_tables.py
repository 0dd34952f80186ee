#!/usr/bin/env python3
"""Build the packaged threshold tables shipped in tbeamon/data.

Both tables target the default monitoring design: per-n false alarm
probability 0.0027 (a 370-observation in-control ARL), burn-in 20,
windows up to 500 observations. The rank detector is cheap to calibrate
so it gets more replications; the ECDF detector additionally estimates
its null moments. Expect roughly half an hour of compute on one core.

Run from the repository root:

    python3 scripts/build_threshold_tables.py [out_dir]
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

from tbeamon.changepoint import calibrate_thresholds

ALPHA = 0.0027
BURN_IN = 20
N_MAX = 500
MW_REPLICATIONS = 100_000
KS_REPLICATIONS = 20_000
KS_MOMENT_REPLICATIONS = 10_000
MW_SEED = 202608141
KS_SEED = 202608142


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "src" / "tbeamon" / "data"
    )
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.time()
    mw = calibrate_thresholds(
        "mw", alpha=ALPHA, burn_in=BURN_IN, n_max=N_MAX,
        replications=MW_REPLICATIONS, random_state=MW_SEED,
    )
    mw.save(out_dir / "mw_thresholds.csv")
    print(f"mw table written after {time.time() - t0:.0f}s", flush=True)

    ks = calibrate_thresholds(
        "ks", alpha=ALPHA, burn_in=BURN_IN, n_max=N_MAX,
        replications=KS_REPLICATIONS, random_state=KS_SEED,
        moments_replications=KS_MOMENT_REPLICATIONS,
    )
    ks.save(out_dir / "ks_thresholds.csv")
    print(f"ks table written after {time.time() - t0:.0f}s", flush=True)


if __name__ == "__main__":
    main()
