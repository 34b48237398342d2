"""Compiled kernels for the quadratic-cost history sum.

The sum ``out[i] = sum_{j < m} w[j] * H[j, i]`` is accumulated strictly in
increasing ``j`` for every component ``i``; threads split the spatial index
only, so results do not depend on the thread count.  Without numba a pure
numpy loop with the same ordering is used.
"""

from __future__ import annotations

import os
import threading

import numpy as np

try:
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip the TBB probe, which warns on older system TBB builds
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

_CHUNK = 512
# the workqueue layer is not reentrant; serialize calls from Python threads
_LOCK = threading.Lock()
_needs_lock = None

if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _wsum_plain(w, H, m, out):
        n = H.shape[1]
        nchunks = (n + _CHUNK - 1) // _CHUNK
        for c in prange(nchunks):
            lo = c * _CHUNK
            hi = min(lo + _CHUNK, n)
            for i in range(lo, hi):
                out[i] = 0.0
            for j in range(m):
                wj = w[j]
                for i in range(lo, hi):
                    out[i] += wj * H[j, i]
        return out

    @njit(cache=True, parallel=True)
    def _wsum_kahan(w, H, m, out):
        n = H.shape[1]
        nchunks = (n + _CHUNK - 1) // _CHUNK
        for c in prange(nchunks):
            lo = c * _CHUNK
            hi = min(lo + _CHUNK, n)
            comp = np.zeros(hi - lo)
            for i in range(lo, hi):
                out[i] = 0.0
            for j in range(m):
                wj = w[j]
                for i in range(lo, hi):
                    y = wj * H[j, i] - comp[i - lo]
                    t = out[i] + y
                    comp[i - lo] = (t - out[i]) - y
                    out[i] = t
        return out


def _wsum_numpy(w, H, m, out, compensated):
    out[:] = 0.0
    if compensated:
        comp = np.zeros_like(out)
        for j in range(m):
            y = w[j] * H[j] - comp
            t = out + y
            comp = (t - out) - y
            out[:] = t
    else:
        for j in range(m):
            out += w[j] * H[j]
    return out


def weighted_history_sum(w: np.ndarray, H: np.ndarray, m: int, out: np.ndarray | None = None,
                         compensated: bool = False) -> np.ndarray:
    """Return ``sum_{j=0}^{m-1} w[j] * H[j]`` for a 2D history block ``H``."""
    if out is None:
        out = np.empty(H.shape[1])
    if HAS_NUMBA:
        global _needs_lock
        kernel = _wsum_kahan if compensated else _wsum_plain
        w = np.ascontiguousarray(w, dtype=float)
        if _needs_lock is False:
            return kernel(w, H, m, out)
        with _LOCK:
            kernel(w, H, m, out)
            _needs_lock = numba.threading_layer() == "workqueue"
        return out
    return _wsum_numpy(w, H, m, out, compensated)


def set_threads(k: int) -> None:
    """Set the worker count used by the parallel kernels (no-op without numba)."""
    if HAS_NUMBA and k >= 1:
        numba.set_num_threads(min(int(k), numba.config.NUMBA_NUM_THREADS))
