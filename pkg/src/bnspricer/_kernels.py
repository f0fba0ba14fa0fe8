"""Hot path-accumulation kernels for the Monte Carlo sampler.

Two interchangeable lanes compute per-path sums of exponentially weighted
jump contributions: a numba-jitted loop and a vectorized pure-numpy
fallback. The active lane is chosen per call: numba when importable unless
the environment variable ``BNS_DISABLE_NUMBA`` is set to 1/true/yes.
Randomness is always generated outside the kernels, so both lanes consume
identical draws and agree to floating-point accumulation order.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency, but stay runnable
    _HAVE_NUMBA = False

__all__ = ["numba_available", "numba_enabled", "accumulate_jumps", "accumulate_ig_candidates"]


def numba_available() -> bool:
    return _HAVE_NUMBA


def numba_enabled() -> bool:
    if not _HAVE_NUMBA:
        return False
    return os.environ.get("BNS_DISABLE_NUMBA", "0").strip().lower() not in ("1", "true", "yes")


def _acc_jumps_py(counts, u, z, lam, tau, out_sig, out_iv, out_jsum, out_cnt):
    idx = np.repeat(np.arange(counts.size), counts)
    e1 = np.exp(-lam * (tau - u))
    out_sig += np.bincount(idx, weights=z * e1, minlength=counts.size)
    out_iv += np.bincount(idx, weights=z * ((1.0 - e1) / lam), minlength=counts.size)
    out_jsum += np.bincount(idx, weights=z, minlength=counts.size)
    out_cnt += counts


def _acc_ig_py(counts, u, v, w, delta, c2, lam, tau, out_sig, out_iv, out_jsum, out_cnt):
    idx = np.repeat(np.arange(counts.size), counts)
    with np.errstate(divide="ignore"):
        z = delta / (v * v)
    keep = w < np.exp(-c2 * z)
    idx, u, z = idx[keep], u[keep], z[keep]
    e1 = np.exp(-lam * (tau - u))
    out_sig += np.bincount(idx, weights=z * e1, minlength=counts.size)
    out_iv += np.bincount(idx, weights=z * ((1.0 - e1) / lam), minlength=counts.size)
    out_jsum += np.bincount(idx, weights=z, minlength=counts.size)
    out_cnt += np.bincount(idx, minlength=counts.size).astype(np.int64)


def _acc_jumps_loop(counts, u, z, lam, tau, out_sig, out_iv, out_jsum, out_cnt):
    i = 0
    for p in range(counts.size):
        for _ in range(counts[p]):
            e1 = math.exp(-lam * (tau - u[i]))
            out_sig[p] += z[i] * e1
            out_iv[p] += z[i] * ((1.0 - e1) / lam)
            out_jsum[p] += z[i]
            i += 1
        out_cnt[p] += counts[p]


def _acc_ig_loop(counts, u, v, w, delta, c2, lam, tau, out_sig, out_iv, out_jsum, out_cnt):
    i = 0
    for p in range(counts.size):
        for _ in range(counts[p]):
            vv = v[i]
            z = delta / (vv * vv) if vv > 0.0 else math.inf
            if w[i] < math.exp(-c2 * z):
                e1 = math.exp(-lam * (tau - u[i]))
                out_sig[p] += z * e1
                out_iv[p] += z * ((1.0 - e1) / lam)
                out_jsum[p] += z
                out_cnt[p] += 1
            i += 1


if _HAVE_NUMBA:
    _acc_jumps_nb = njit(cache=True)(_acc_jumps_loop)
    _acc_ig_nb = njit(cache=True)(_acc_ig_loop)


def accumulate_jumps(counts, u, z, lam, tau, out_sig, out_iv, out_jsum, out_cnt):
    """Per-path sums of z*exp(-lam*(tau-u)), z*eps(tau-u) and z for exact jumps."""
    fn = _acc_jumps_nb if numba_enabled() else _acc_jumps_py
    fn(counts, u, z, lam, tau, out_sig, out_iv, out_jsum, out_cnt)


def accumulate_ig_candidates(counts, u, v, w, delta, c2, lam, tau, out_sig, out_iv, out_jsum, out_cnt):
    """Tempered-stable series candidates: size delta/v^2, kept when w < exp(-c2 z)."""
    fn = _acc_ig_nb if numba_enabled() else _acc_ig_py
    fn(counts, u, v, w, delta, c2, lam, tau, out_sig, out_iv, out_jsum, out_cnt)
