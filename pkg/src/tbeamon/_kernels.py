"""Compiled inner loops for sequential change-point statistics.

Everything here is written against plain float64/int64 arrays so numba
can compile it once and the public modules stay readable. The rank
(Mann-Whitney) machinery maintains the prefix-sum identity

    U_{k,n} = U_{k,n-1} + sum_{i<=k} sign(z_i - z_n)

so ingesting one observation costs O(n). The ECDF (Kolmogorov-Smirnov)
machinery keeps the window value-sorted with each value's arrival time,
and evaluates the two-sample distance only at the end of each run of
tied values. The chart statistic is the one-sided dominance distance

    D+_{k,t} = max_j (t*B_j - k*j) / (k*(t-k))

where B_j counts first-segment members among the j smallest values; it
is positive exactly when the observations after the split sit above
those before it, which is the direction the monitored ratio moves when
events arrive sooner and stronger. The two-sided distance takes the
absolute value of the inner term instead.

Standardized KS statistics divide out per-(k,t) null moments; beyond the
tabulated window length the limit law of the one-sided distance,
P(X <= x) = 1 - exp(-2 x^2), provides them, with mean and sd
proportional to sqrt(t / (k*(t-k))).
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Moments of the one-sided limit law 1 - exp(-2x^2): mean = sqrt(pi/8),
# second moment = 1/2.
KS_LIMIT_MEAN = float(np.sqrt(np.pi / 8.0))
KS_LIMIT_SD = float(np.sqrt(0.5 - np.pi / 8.0))

MW_DETECTOR = 0
KS_DETECTOR = 1


@njit(cache=True)
def _mw_ingest(wbuf, u, n_old, x):
    """Append x as observation n_old+1, updating the U prefix array."""
    s = 0.0
    for i in range(n_old):
        d = wbuf[i] - x
        if d > 0.0:
            s += 1.0
        elif d < 0.0:
            s -= 1.0
        u[i + 1] += s
    wbuf[n_old] = x


@njit(cache=True)
def _mw_max(u, n):
    """Max over k of |U_{k,n}| standardized; returns (stat, argmax_k)."""
    best = -np.inf
    kb = 0
    for k in range(1, n):
        t = abs(u[k]) / np.sqrt(k * (n - k) * (n + 1.0) / 3.0)
        if t > best:
            best = t
            kb = k
    return best, kb


@njit(cache=True)
def _ks_insert(svals, stime, n_old, x):
    """Insert x into the sorted window, stamping its arrival time."""
    lo = 0
    hi = n_old
    while lo < hi:
        mid = (lo + hi) >> 1
        if svals[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    for j in range(n_old, lo, -1):
        svals[j] = svals[j - 1]
        stime[j] = stime[j - 1]
    svals[lo] = x
    stime[lo] = n_old + 1


@njit(cache=True)
def _ks_raw(svals, stime, t, k, two_sided):
    """ECDF distance between times <= k and the rest.

    One-sided by default: the largest excess of the first segment's ECDF
    over the rest's (non-negative, since the difference closes to zero
    at the top of the pooled sample). ``two_sided`` takes the absolute
    difference instead.
    """
    b = 0
    kj = 0
    best = 0
    for j in range(t):
        if stime[j] <= k:
            b += 1
        kj += k
        if j + 1 < t and svals[j + 1] == svals[j]:
            continue
        g = t * b - kj
        if two_sided and g < 0:
            g = -g
        if g > best:
            best = g
    return best / (k * (t - k))


@njit(cache=True)
def _ks_std_max(svals, stime, t, mean2d, sd2d, moments_nmax):
    """Max over k of the standardized dominance distance; (stat, argmax_k)."""
    best = -np.inf
    kb = 0
    for k in range(1, t):
        d = _ks_raw(svals, stime, t, k, False)
        if t <= moments_nmax:
            mu = mean2d[t, k]
            sd = sd2d[t, k]
        else:
            root = np.sqrt(t / (k * (t - k)))
            mu = KS_LIMIT_MEAN * root
            sd = KS_LIMIT_SD * root
        v = (d - mu) / sd
        if v > best:
            best = v
            kb = k
    return best, kb


@njit(cache=True)
def mw_trace(z, burn_in, out):
    """Per-n max statistic of one stream; out[n] filled for n > burn_in."""
    n_max = z.size
    u = np.zeros(n_max + 1)
    wbuf = np.empty(n_max)
    for n in range(1, n_max + 1):
        _mw_ingest(wbuf, u, n - 1, z[n - 1])
        if n > burn_in:
            stat, _ = _mw_max(u, n)
            out[n] = stat


@njit(cache=True)
def ks_trace(z, burn_in, mean2d, sd2d, moments_nmax, out):
    """Per-n standardized max statistic of one stream."""
    n_max = z.size
    svals = np.empty(n_max)
    stime = np.empty(n_max, np.int64)
    for n in range(1, n_max + 1):
        _ks_insert(svals, stime, n - 1, z[n - 1])
        if n > burn_in:
            stat, _ = _ks_std_max(svals, stime, n, mean2d, sd2d, moments_nmax)
            out[n] = stat


@njit(cache=True)
def ks_accumulate_moments(z, sums, sumsq):
    """Add this stream's raw D+_{k,t} (all k, all t >= 2) into accumulators."""
    n_max = z.size
    svals = np.empty(n_max)
    stime = np.empty(n_max, np.int64)
    for t in range(1, n_max + 1):
        _ks_insert(svals, stime, t - 1, z[t - 1])
        if t >= 2:
            for k in range(1, t):
                d = _ks_raw(svals, stime, t, k, False)
                sums[t, k] += d
                sumsq[t, k] += d * d


@njit(cache=True)
def monitor_stream(z, burn_in, thresholds, detector, mean2d, sd2d, moments_nmax, restart_after_tau):
    """Sequential monitoring with growing window and restart on detection.

    The window starts at global offset w0 (0-based). Testing begins once
    the window exceeds burn_in and happens once per arriving
    observation. On a detection at window size n with split k, the
    recorded indices are global and 1-based: detection at w0+n,
    estimated change at w0+k. Restart keeps the observations after the
    estimated change (or discards through the detection): the retained
    suffix is re-adopted as the current window without being re-tested,
    so every alarm opportunity involves fresh data and later change
    points can still be found. The threshold for window sizes beyond
    the table reuses the last entry; the returned max_tested reports
    how far a tested window actually grew.
    """
    big = z.size
    det_idx = np.empty(big, np.int64)
    tau_idx = np.empty(big, np.int64)
    stats = np.empty(big)
    ndet = 0
    u = np.zeros(big + 1)
    wbuf = np.empty(big)
    svals = np.empty(big)
    stime = np.empty(big, np.int64)
    w0 = 0
    i = 0
    n = 0
    max_tested = 0
    h_last = thresholds.size - 1
    while i < big:
        x = z[i]
        i += 1
        if detector == MW_DETECTOR:
            _mw_ingest(wbuf, u, n, x)
        else:
            _ks_insert(svals, stime, n, x)
        n += 1
        if n > burn_in:
            if n > max_tested:
                max_tested = n
            if detector == MW_DETECTOR:
                stat, kb = _mw_max(u, n)
            else:
                stat, kb = _ks_std_max(svals, stime, n, mean2d, sd2d, moments_nmax)
            h = thresholds[n] if n <= h_last else thresholds[h_last]
            if stat > h:
                det_idx[ndet] = w0 + n
                tau_idx[ndet] = w0 + kb
                stats[ndet] = stat
                ndet += 1
                if restart_after_tau:
                    w0 += kb
                else:
                    w0 += n
                for j in range(n + 1):
                    u[j] = 0.0
                n = 0
                for j in range(w0, i):
                    if detector == MW_DETECTOR:
                        _mw_ingest(wbuf, u, n, z[j])
                    else:
                        _ks_insert(svals, stime, n, z[j])
                    n += 1
    return det_idx[:ndet], tau_idx[:ndet], stats[:ndet], max_tested


@njit(cache=True)
def ewma_first_crossing(s_star, lam, ucl):
    """1-based index of the first clamped-EWMA exceedance, 0 if none."""
    z = 0.0
    for i in range(s_star.size):
        z = lam * s_star[i] + (1.0 - lam) * z
        if z < 0.0:
            z = 0.0
        if z > ucl:
            return i + 1
    return 0


@njit(cache=True)
def ewma_upcrossings(s_star, lam, ucl):
    """Count of below-to-above control-limit transitions along the run."""
    z = 0.0
    above = False
    count = 0
    for i in range(s_star.size):
        z = lam * s_star[i] + (1.0 - lam) * z
        if z < 0.0:
            z = 0.0
        if z > ucl:
            if not above:
                count += 1
                above = True
        else:
            above = False
    return count


@njit(cache=True)
def ewma_alarm_count(s_star, lam, ucl):
    """Alarms along the run, restarting the chart at 0 after each one."""
    z = 0.0
    count = 0
    for i in range(s_star.size):
        z = lam * s_star[i] + (1.0 - lam) * z
        if z < 0.0:
            z = 0.0
        if z > ucl:
            count += 1
            z = 0.0
    return count


@njit(cache=True)
def ewma_alarm_at_or_after(s_star, lam, ucl, first):
    """First alarm index >= first (1-based) of the restarting chart.

    The chart runs from the start of the stream and resets to 0 after
    every alarm, so by index ``first`` it sits at its steady-state level
    rather than at 0. Returns 0 when no qualifying alarm occurs.
    """
    z = 0.0
    for i in range(s_star.size):
        z = lam * s_star[i] + (1.0 - lam) * z
        if z < 0.0:
            z = 0.0
        if z > ucl:
            if i + 1 >= first:
                return i + 1
            z = 0.0
    return 0
