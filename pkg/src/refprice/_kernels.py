"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

Backend selection happens once at import time.  Setting the environment
variable ``REFPRICE_NUMBA=0`` (also ``off``/``false``/``no``) forces the
numpy fallback; otherwise numba is used whenever it imports cleanly.
``USING_NUMBA`` records the active backend so callers and benchmarks can
report it.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    flag = os.environ.get("REFPRICE_NUMBA", "").strip().lower()
    if flag in {"0", "off", "false", "no"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _numba_enabled()


# ---------------------------------------------------------------------------
# kernel bodies (plain numpy; compiled with numba when enabled)
# ---------------------------------------------------------------------------

def _pg_ascent_multi(M, a, p_max, step, starts, tol, max_iter):
    """Projected gradient ascent for x^T M x + a^T x over [0, p_max]^D,
    run from every row of ``starts``; keeps the best end point.

    Fixed step size; each start stops when the per-step movement
    (projection residual) drops below ``tol``.  Ordered reduction:
    strict value improvement wins, exact value ties break to the
    lexicographically smaller point.  Returns
    (best_x, best_value, total_iterations).
    """
    n_starts = starts.shape[0]
    best_x = starts[0].copy()
    best_val = -np.inf
    total_it = 0
    for s in range(n_starts):
        x = starts[s].copy()
        it = 0
        for it in range(1, max_iter + 1):
            g = 2.0 * (M @ x) + a
            xn = np.minimum(np.maximum(x + step * g, 0.0), p_max)
            delta = np.max(np.abs(xn - x))
            x = xn
            if delta < tol:
                break
        total_it += it
        val = x @ (M @ x) + a @ x
        take = False
        if val > best_val:
            take = True
        elif val == best_val:
            for i in range(x.shape[0]):
                if x[i] < best_x[i]:
                    take = True
                    break
                if x[i] > best_x[i]:
                    break
        if take:
            best_val = val
            best_x = x.copy()
    return best_x, best_val, total_it


def _nsd_scan_plain(cands, H, n, tol):
    """First row of ``cands`` whose plain-variant band matrix is NSD, else -1.

    Each candidate row is a plain-layout parameter vector; the matrix is
    the same one build_quadratic assembles, and the NSD test matches
    is_nsd (largest eigenvalue <= tol).
    """
    n_cands = cands.shape[0]
    for i in range(n_cands):
        th = cands[i]
        M = np.zeros((H, H))
        for d in range(H):
            M[d, d] = th[1]
        for h in range(2, H + 1):
            j = min(h - 1, n)
            off = 2 + j * (j - 1) // 2
            c = h - 1
            for t in range(j):
                M[c - j + t, c] = 0.5 * th[off + t]
                M[c, c - j + t] = 0.5 * th[off + t]
        w = np.linalg.eigvalsh(M)
        if w[-1] <= tol:
            return i
    return -1


def _grid_scan_loop(M, a, p_max, npts):
    """Exhaustive scan of the uniform grid over [0, p_max]^D (odometer order).

    Grid includes both endpoints.  Returns (best_value, best_flat_index)
    where the flat index encodes grid coordinates most-significant-first,
    so ascending index order is lexicographic order and the first strict
    maximum is the lexicographically smallest argmax.
    """
    D = M.shape[0]
    grid = np.linspace(0.0, p_max, npts)
    digits = np.zeros(D, dtype=np.int64)
    x = np.zeros(D)
    total = 1
    for _ in range(D):
        total *= npts
    best_val = -np.inf
    best_idx = 0
    for flat in range(total):
        val = x @ (M @ x) + a @ x
        if val > best_val:
            best_val = val
            best_idx = flat
        # odometer increment, last dimension fastest
        d = D - 1
        while d >= 0:
            digits[d] += 1
            if digits[d] < npts:
                x[d] = grid[digits[d]]
                break
            digits[d] = 0
            x[d] = grid[0]
            d -= 1
    return best_val, best_idx


def _grid_scan_vectorized(M, a, p_max, npts, chunk=500_000):
    """Chunked vectorized grid scan: the numpy-backend implementation.

    Enumerates the same lexicographic order as _grid_scan_loop (flat
    index, last dimension fastest) with first-strict-maximum tie-breaks.
    """
    D = M.shape[0]
    grid = np.linspace(0.0, p_max, npts)
    total = npts ** D
    best_val = -np.inf
    best_idx = 0
    radix = npts ** np.arange(D - 1, -1, -1, dtype=np.int64)
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        flat = np.arange(lo, hi, dtype=np.int64)
        digits = (flat[:, None] // radix[None, :]) % npts
        X = grid[digits]
        vals = ((X @ M) * X).sum(axis=1) + X @ a
        pos = int(np.argmax(vals))
        if vals[pos] > best_val:
            best_val = float(vals[pos])
            best_idx = int(flat[pos])
    return best_val, best_idx


if USING_NUMBA:
    from numba import njit

    pg_ascent_multi = njit(cache=True)(_pg_ascent_multi)
    nsd_scan_plain = njit(cache=True)(_nsd_scan_plain)
else:
    pg_ascent_multi = _pg_ascent_multi
    nsd_scan_plain = _nsd_scan_plain

# The grid oracle enumerates millions of points in bulk: the chunked
# BLAS-vectorized scan beats a jitted scalar loop there, so both
# backends share it.  The scalar odometer stays as the semantic
# reference for the enumeration order and tie-break.
grid_scan = _grid_scan_vectorized


# Fallback-path references kept importable regardless of the active
# backend, for benchmarking and for cross-checking the two paths.
pg_ascent_multi_numpy = _pg_ascent_multi
nsd_scan_plain_numpy = _nsd_scan_plain
grid_scan_numpy = _grid_scan_vectorized
grid_scan_loop_numpy = _grid_scan_loop
