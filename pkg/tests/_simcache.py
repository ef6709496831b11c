"""Disk-checkpointed Monte-Carlo runs for the acceptance fixtures.

The acceptance simulations take tens of minutes in total, and this
environment can interrupt long processes; checkpointing per-run results
lets a rerun resume where it stopped instead of recomputing.  Each run
is produced by the harness's own per-run worker and aggregated by the
harness's own collector, so the assembled traces are exactly what
evaluate_regret returns (asserted by a unit test).  Runs key on
(config-without-runs, run index) because RNG substreams do, so extending
`runs` reuses the cached prefix.  Delete tests/.sim_cache to recompute
everything from scratch.
"""

import hashlib
import json
import pickle
import time
from pathlib import Path

from refprice.harness import ExperimentConfig, collect_sync_traces, _run_sync_once

CACHE_DIR = Path(__file__).resolve().parent / ".sim_cache"


def _config_key(config: ExperimentConfig) -> str:
    spec, opts = config.spec, config.solve_opts
    payload = {
        "variant": spec.variant.value,
        "H": spec.H, "n": spec.n, "q": spec.q, "m": spec.m,
        "p_max": spec.p_max, "sigma2": spec.sigma2,
        "mu": config.prior_mu.tolist(),
        "sigma": config.prior_sigma.tolist(),
        "strategies": [(label, cfg.kind, cfg.epsilon, cfg.nsd_resample_limit)
                       for label, cfg in config.strategies],
        "K": config.K, "seed": config.seed,
        "solver": [opts.tol, opts.max_iter, opts.n_starts, opts.nsd_tol],
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:20]


def cached_evaluate(config: ExperimentConfig, checkpoint_every: int = 5,
                    cache_dir: Path | None = None):
    """evaluate_regret with resumable per-run checkpoints."""
    cache_dir = cache_dir or CACHE_DIR
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"{_config_key(config)}.pkl"
    results: list = []
    if path.exists():
        with open(path, "rb") as fh:
            results = pickle.load(fh)
    t0 = time.perf_counter()
    dirty = False
    for r in range(len(results), config.runs):
        results.append(_run_sync_once(config, r))
        dirty = True
        if (r + 1) % checkpoint_every == 0:
            with open(path, "wb") as fh:
                pickle.dump(results, fh)
    if dirty:
        with open(path, "wb") as fh:
            pickle.dump(results, fh)
    elapsed = time.perf_counter() - t0
    return collect_sync_traces(config, results[:config.runs], elapsed)
