"""Simulation harness: episode execution, Monte-Carlo regret estimation,
asynchronous overlapping life cycles and the theoretical bound calculator.

Every run owns RNG substreams derived from (master seed, run index,
channel) via SeedSequence spawn keys, so runs are reproducible
bit-for-bit and safe to execute in parallel.  All strategies inside one
run share the environment draw and the demand-noise stream (common
random numbers), which pairs the comparison and cuts estimator variance.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .model import (ModelSpec, Observation, Variant, advance_state,
                    empty_state, expected_demand, featurize, sample_demand)
from .planner import SolveOptions, SolveReport, plan_report
from .posterior import GaussianBelief, posterior_update
from .strategies import Strategy, StrategyConfig, make_strategy, sample_nsd_plan

# RNG channel tags
_ENV, _NOISE, _STRAT = 0, 1, 2


def substream(seed: int, run: int, channel: int, index: int = 0):
    """Independent generator for (seed, run, channel, index)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(run, channel, index))
    return np.random.default_rng(ss)


@dataclass
class LaunchEvent:
    """One asynchronous product launch: start time, episode length, context."""

    t: int
    H: int
    z: np.ndarray | None = None


@dataclass
class ExperimentConfig:
    spec: ModelSpec
    prior_mu: np.ndarray
    prior_sigma: np.ndarray
    strategies: list[tuple[str, StrategyConfig]]
    K: int
    runs: int
    seed: int
    launch_schedule: list[LaunchEvent] | None = None
    solve_opts: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        self.prior_mu = np.asarray(self.prior_mu, dtype=float).reshape(-1)
        self.prior_sigma = np.asarray(self.prior_sigma, dtype=float)
        if self.prior_mu.shape[0] != self.spec.param_dim:
            raise ValueError(
                f"prior mean has length {self.prior_mu.shape[0]}, spec "
                f"implies {self.spec.param_dim}")
        if self.prior_sigma.shape != (self.spec.param_dim, self.spec.param_dim):
            raise ValueError("prior covariance shape mismatch")
        if not self.strategies:
            raise ValueError("at least one strategy required")
        if self.launch_schedule is None:
            if self.spec.n >= self.spec.H:
                raise ValueError(
                    f"episodic runs need n < H, got n={self.spec.n}, "
                    f"H={self.spec.H}")
        else:
            if self.spec.q != 1:
                raise ValueError("the asynchronous runner prices one "
                                 "product per episode (q = 1)")
            if len(self.launch_schedule) != self.K:
                raise ValueError("K must equal the number of launch events")
            for k, ev in enumerate(self.launch_schedule):
                if ev.t < 1:
                    raise ValueError("launch times start at 1")
                if self.spec.n > ev.H:
                    raise ValueError(
                        f"schedule violates n <= H_k: n={self.spec.n}, "
                        f"H_k={ev.H}")
                if self.spec.variant is Variant.COVARIATE:
                    if ev.z is None or np.asarray(ev.z).shape != (self.spec.m,):
                        raise ValueError(
                            f"launch {k + 1} needs a length-{self.spec.m} "
                            "covariate vector")
                elif ev.z is not None:
                    raise ValueError(
                        f"launch {k + 1} carries a covariate vector but the "
                        f"{self.spec.variant.value} variant takes none")


@dataclass
class RegretTrace:
    """Per-episode expected-regret estimates averaged over runs."""

    per_episode_regret: np.ndarray
    std_error: np.ndarray
    cumulative_regret: np.ndarray
    per_run_regret: np.ndarray
    metadata: dict


def run_episode(theta_true, strategy: Strategy, spec: ModelSpec, z=None,
                rng=None, noise=None, episode: int = 1):
    """Play one episode; returns (observations, expected revenue).

    The revenue is expected revenue under theta_true (sum of price times
    mean demand), which is what regret accounting uses; observations
    carry the realized demand draws.  ``noise`` supplies pre-drawn
    standard-normal shocks of shape (H,) or (H, q) for paired runs.
    """
    if noise is None and rng is None:
        raise ValueError("need an rng when noise draws are not supplied")
    strategy.begin_episode(z)
    state = empty_state()
    observations = []
    revenue = 0.0
    for h in range(1, spec.H + 1):
        p = strategy.price(h, state)
        d = expected_demand(theta_true, p, state, z, h, spec)
        xi = None if noise is None else noise[h - 1]
        y, w = sample_demand(rng, d, spec.sigma2, xi=xi)
        observations.append(Observation(episode, h, p, state, y, w, z))
        strategy.observe(h, p, state, w)
        revenue += float(np.dot(np.atleast_1d(p), np.atleast_1d(d)))
        state = advance_state(state, p, spec)
    strategy.end_episode()
    return observations, revenue


def oracle_report(theta_true, spec: ModelSpec, z=None,
                  opts: SolveOptions | None = None) -> SolveReport:
    """Best plan for the true parameters (certified only when concave)."""
    return plan_report(theta_true, spec, z, opts)


def optimal_value(theta_true, spec: ModelSpec, z=None,
                  opts: SolveOptions | None = None) -> float:
    return oracle_report(theta_true, spec, z, opts).value


def _draw_theta_true(config: ExperimentConfig, rng) -> np.ndarray:
    sigma = config.prior_sigma
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        L = np.linalg.cholesky(sigma + 1e-12 * np.eye(sigma.shape[0]))
    return config.prior_mu + L @ rng.standard_normal(config.prior_mu.shape[0])


def _run_sync_once(config: ExperimentConfig, r: int) -> dict:
    spec, K = config.spec, config.K
    theta_true = _draw_theta_true(config, substream(config.seed, r, _ENV))
    oracle = oracle_report(theta_true, spec, opts=config.solve_opts)
    shape = (K, spec.H) if spec.q == 1 else (K, spec.H, spec.q)
    xi = substream(config.seed, r, _NOISE).standard_normal(shape)
    prior = (config.prior_mu, config.prior_sigma)
    out = {"concave": oracle.concave, "regret": {}, "meta": {}}
    for s_idx, (label, scfg) in enumerate(config.strategies):
        rng = substream(config.seed, r, _STRAT, s_idx)
        strategy = make_strategy(label, scfg, spec, prior, rng,
                                 config.solve_opts)
        regrets = np.empty(K)
        for k in range(K):
            _obs, revenue = run_episode(theta_true, strategy, spec,
                                        noise=xi[k], episode=k + 1)
            regrets[k] = oracle.value - revenue
        out["regret"][label] = regrets
        out["meta"][label] = strategy.metadata()
    return out


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("REFPRICE_THREADS", "1") or "1")
    return max(1, threads)


def _aggregate(per_run: np.ndarray, metadata: dict) -> RegretTrace:
    runs = per_run.shape[0]
    mean = per_run.mean(axis=0)
    if runs > 1:
        se = per_run.std(axis=0, ddof=1) / math.sqrt(runs)
    else:
        se = np.zeros_like(mean)
    return RegretTrace(per_episode_regret=mean, std_error=se,
                       cumulative_regret=np.cumsum(mean),
                       per_run_regret=per_run, metadata=metadata)


def collect_sync_traces(config: ExperimentConfig, results: list,
                        elapsed: float) -> dict[str, RegretTrace]:
    """Assemble per-strategy traces from per-run worker results."""
    concave_fraction = float(np.mean([res["concave"] for res in results]))
    traces: dict[str, RegretTrace] = {}
    for label, _scfg in config.strategies:
        per_run = np.vstack([res["regret"][label] for res in results])
        meta = {
            "nsd_exhaustions": int(sum(res["meta"][label]["nsd_exhaustions"]
                                       for res in results)),
            "nsd_draws": int(sum(res["meta"][label]["nsd_draws"]
                                 for res in results)),
            "oracle_concave_fraction": concave_fraction,
            "elapsed_seconds": elapsed,
        }
        traces[label] = _aggregate(per_run, meta)
    return traces


def evaluate_regret(config: ExperimentConfig,
                    threads: int | None = None) -> dict[str, RegretTrace]:
    """Monte-Carlo regret of every configured strategy (paired runs)."""
    threads = _resolve_threads(threads)
    t0 = time.perf_counter()
    if threads == 1:
        results = [_run_sync_once(config, r) for r in range(config.runs)]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_sync_once, [config] * config.runs,
                                    range(config.runs), chunksize=1))
    return collect_sync_traces(config, results, time.perf_counter() - t0)


def _run_async_once(config: ExperimentConfig, r: int) -> dict:
    spec = config.spec
    schedule = config.launch_schedule
    label, scfg = config.strategies[0]
    theta_true = _draw_theta_true(config, substream(config.seed, r, _ENV))
    strat_rng = substream(config.seed, r, _STRAT, 0)
    belief = GaussianBelief.from_moments(config.prior_mu, config.prior_sigma)

    specs = [replace(spec, H=ev.H) for ev in schedule]
    noises = [substream(config.seed, r, _NOISE, k).standard_normal(ev.H)
              for k, ev in enumerate(schedule)]
    oracles = [oracle_report(theta_true, specs[k], schedule[k].z,
                             config.solve_opts)
               for k in range(len(schedule))]

    plans: dict[int, np.ndarray] = {}
    states: dict[int, np.ndarray] = {}
    revenue = np.zeros(len(schedule))
    all_rows, all_targets = [], []
    exhaustions = 0
    draws = 0
    t_end = max(ev.t + ev.H - 1 for ev in schedule)
    for t in range(1, t_end + 1):
        for k, ev in enumerate(schedule):
            if ev.t == t:
                report, _theta, used, exhausted = sample_nsd_plan(
                    belief, specs[k], ev.z, strat_rng,
                    scfg.nsd_resample_limit, config.solve_opts)
                plans[k] = report.plan
                states[k] = empty_state()
                draws += used
                exhaustions += int(exhausted)
        rows, targets = [], []
        for k, ev in enumerate(schedule):
            if ev.t <= t <= ev.t + ev.H - 1:
                h = t - ev.t + 1
                p = float(plans[k][h - 1])
                d = expected_demand(theta_true, p, states[k], ev.z, h, specs[k])
                _y, w = sample_demand(None, d, spec.sigma2,
                                      xi=noises[k][h - 1])
                rows.append(featurize(p, states[k], ev.z, h, specs[k]))
                targets.append(w)
                revenue[k] += p * d
                states[k] = advance_state(states[k], p, specs[k])
        if rows:
            belief = posterior_update(belief, np.array(rows),
                                      np.array(targets), spec.sigma2)
            all_rows.extend(rows)
            all_targets.extend(targets)
    regrets = np.array([oracles[k].value for k in range(len(schedule))]) - revenue
    return {"regret": regrets, "plans": plans, "belief": belief,
            "rows": np.array(all_rows), "targets": np.array(all_targets),
            "concave": float(np.mean([o.concave for o in oracles])),
            "exhaustions": exhaustions, "draws": draws, "label": label}


def run_async(config: ExperimentConfig,
              threads: int | None = None) -> RegretTrace:
    """Overlapping-life-cycle pricing with one shared per-period belief."""
    if not config.launch_schedule:
        raise ValueError("run_async needs a launch schedule")
    if config.strategies[0][1].kind != "tp":
        raise ValueError("the asynchronous runner drives a tp strategy")
    threads = _resolve_threads(threads)
    t0 = time.perf_counter()
    if threads == 1:
        results = [_run_async_once(config, r) for r in range(config.runs)]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_async_once, [config] * config.runs,
                                    range(config.runs), chunksize=1))
    per_run = np.vstack([res["regret"] for res in results])
    meta = {
        "nsd_exhaustions": int(sum(res["exhaustions"] for res in results)),
        "nsd_draws": int(sum(res["draws"] for res in results)),
        "oracle_concave_fraction": float(np.mean([res["concave"]
                                                  for res in results])),
        "elapsed_seconds": time.perf_counter() - t0,
    }
    return _aggregate(per_run, meta)


def regret_bound(sigma2: float, d_max: float, p_max: float, K: int, H: int,
                 q: int, d_E: float, log_N: float) -> tuple[float, float]:
    """Evaluate the Thompson-pricing regret bound and its beta_K term.

    d_E is the eluder dimension of the demand class at scale (KH)^-2 and
    log_N the log covering number at the same scale; both are caller
    supplied (estimating them is out of scope).
    """
    for name, val in (("sigma2", sigma2), ("d_max", d_max),
                      ("p_max", p_max), ("K", K), ("H", H), ("q", q)):
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    if d_E < 0 or log_N < 0:
        raise ValueError("d_E and log_N must be nonnegative")
    KH = K * H
    beta_K = 8.0 * sigma2 * (math.log(KH ** 2) + log_N) \
        + (2.0 / KH) * (8.0 * d_max + math.sqrt(8.0 * sigma2 * math.log(4.0)))
    bound = q * p_max * (1.0 + H * d_max * d_E
                         + 4.0 * math.sqrt(beta_K * d_E * KH)) \
        + 4.0 * q * p_max * d_max / KH
    return beta_K, bound
