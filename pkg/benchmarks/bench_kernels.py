"""Benchmark the jitted kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py

The numba path is what ``REFPRICE_NUMBA`` unset (or =1) selects; the
numpy rows show what ``REFPRICE_NUMBA=0`` would cost.  Representative
shapes come from the benchmark simulation setting: 20-period episodes,
memory 6, posterior resampling batches of 100.
"""

import time

import numpy as np

from refprice import _kernels
from refprice.model import ModelSpec, Variant
from refprice.planner import build_quadratic

REPEAT = 50


def timeit(fn, *args, repeat=REPEAT):
    fn(*args)  # warmup / jit compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_pg(rng):
    spec = ModelSpec(Variant.PLAIN, H=20, n=6, p_max=1.0, sigma2=10.0)
    theta = np.concatenate([[7.5, -4.0], rng.normal(0, 3, spec.param_dim - 2)])
    qp = build_quadratic(theta, spec)
    evals = np.linalg.eigvalsh(qp.M)
    step = 1.0 / (2.0 * max(abs(evals[0]), abs(evals[-1])))
    starts = rng.uniform(0, 1, size=(16, 20))
    args = (np.ascontiguousarray(qp.M), qp.a, 1.0, step,
            np.ascontiguousarray(starts), 1e-9, 10_000)
    return ("pg_ascent_multi (16 starts, H=20)",
            timeit(_kernels.pg_ascent_multi, *args),
            timeit(_kernels.pg_ascent_multi_numpy, *args, repeat=5))


def bench_nsd_scan(rng):
    dim = 2 + 6 * 7 // 2
    cands = rng.normal(0, 3, size=(100, dim))
    cands[:, 1] -= 4.0
    args = (np.ascontiguousarray(cands), 20, 6, 1e-10)
    return ("nsd_scan_plain (100 candidates)",
            timeit(_kernels.nsd_scan_plain, *args),
            timeit(_kernels.nsd_scan_plain_numpy, *args, repeat=5))


def main():
    if not _kernels.USING_NUMBA:
        print("refusing to benchmark: numba backend inactive "
              "(unset REFPRICE_NUMBA)")
        return 1
    rng = np.random.default_rng(0)
    rows = [bench_pg(rng), bench_nsd_scan(rng)]
    print(f"{'kernel':40s} {'numba':>12s} {'numpy':>12s} {'speedup':>9s}")
    for name, fast, slow in rows:
        print(f"{name:40s} {fast * 1e3:10.3f}ms {slow * 1e3:10.3f}ms "
              f"{slow / fast:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
