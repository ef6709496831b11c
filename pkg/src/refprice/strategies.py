"""The five pricing strategies behind one episode-lifecycle contract.

Episodic strategies (Thompson pricing, certainty equivalence, eps-greedy)
plan at episode start and fold the episode batch into the posterior at
episode end.  Per-period strategies (weak Thompson sampling, memoryless
Thompson sampling) resample and update after every period.  All prices
stay inside [0, p_max].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import ModelSpec, Variant, featurize, unpack_params
from .planner import SolveOptions, build_quadratic, is_nsd, plan_report
from .posterior import GaussianBelief, posterior_update

KINDS = ("tp", "memoryless-ts", "weak-ts", "ce", "eps-greedy")


@dataclass
class StrategyConfig:
    """Kind plus hyperparameters; ``prior`` defaults to the experiment prior."""

    kind: str
    epsilon: float = 0.0
    nsd_resample_limit: int = 100
    prior: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        kind = self.kind.strip().lower()
        if kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}; "
                             f"expected one of {KINDS}")
        self.kind = kind
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.nsd_resample_limit < 1:
            raise ValueError("nsd_resample_limit must be >= 1")


def myopic_price(ahat: float, bhat: float, p_max: float) -> float:
    """Maximize a*p + b*p^2 over [0, p_max]."""
    if bhat < 0.0:
        return float(np.clip(-ahat / (2.0 * bhat), 0.0, p_max))
    top = ahat * p_max + bhat * p_max * p_max
    return p_max if top > 0.0 else 0.0


def sample_nsd_plan(belief: GaussianBelief, spec: ModelSpec, z, rng,
                    limit: int, opts: SolveOptions | None = None):
    """Sample from the belief until the sampled quadratic is NSD.

    Draws the full candidate batch up front (deterministic stream
    consumption) and scans for the first NSD candidate; on exhaustion the
    last candidate goes through the indefinite solver path.  Returns
    (report, theta, draws_used, exhausted).
    """
    opts = opts or SolveOptions()
    cands = belief.sample_batch(rng, limit)
    if spec.variant is Variant.PLAIN:
        idx = int(_kernels.nsd_scan_plain(
            np.ascontiguousarray(cands), spec.H, spec.n, opts.nsd_tol))
    else:
        idx = -1
        for i in range(limit):
            if is_nsd(build_quadratic(cands[i], spec, z).M, opts.nsd_tol):
                idx = i
                break
    exhausted = idx < 0
    theta = cands[limit - 1] if exhausted else cands[idx]
    report = plan_report(theta, spec, z, opts)
    draws = limit if exhausted else idx + 1
    return report, theta, draws, exhausted


class Strategy:
    """Shared lifecycle: begin_episode / price / observe / end_episode."""

    def __init__(self, label: str, config: StrategyConfig, spec: ModelSpec,
                 prior: tuple[np.ndarray, np.ndarray], rng,
                 opts: SolveOptions | None = None):
        self.label = label
        self.config = config
        self.spec = spec
        self.rng = rng
        self.opts = opts or SolveOptions()
        mu0, sigma0 = config.prior if config.prior is not None else prior
        self.belief = GaussianBelief.from_moments(mu0, sigma0)
        self.current_plan: np.ndarray | None = None
        self.nsd_exhaustions = 0
        self.nsd_draws = 0
        self._z = None

    def begin_episode(self, z=None) -> None:
        self._z = z

    def price(self, h: int, state):
        raise NotImplementedError

    def observe(self, h: int, price, state, w) -> None:
        raise NotImplementedError

    def end_episode(self) -> None:
        pass

    def metadata(self) -> dict:
        return {"nsd_exhaustions": self.nsd_exhaustions,
                "nsd_draws": self.nsd_draws}


class _EpisodicStrategy(Strategy):
    """Plan once per episode; batch posterior update at episode end."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._rows: list[np.ndarray] = []
        self._targets: list[float] = []

    def price(self, h: int, state):
        p = self.current_plan[h - 1]
        return float(p) if self.spec.q == 1 else p

    def observe(self, h: int, price, state, w) -> None:
        X = featurize(price, state, self._z, h, self.spec)
        if self.spec.q == 1:
            self._rows.append(X)
            self._targets.append(float(w))
        else:
            for j in range(self.spec.q):
                self._rows.append(X[j])
                self._targets.append(float(np.asarray(w)[j]))

    def end_episode(self) -> None:
        self.belief = posterior_update(
            self.belief, np.array(self._rows), np.array(self._targets),
            self.spec.sigma2)
        self._rows, self._targets = [], []


class ThompsonPricing(_EpisodicStrategy):
    """Posterior-sample a model, resampling toward an NSD quadratic."""

    def begin_episode(self, z=None) -> None:
        super().begin_episode(z)
        report, _theta, draws, exhausted = sample_nsd_plan(
            self.belief, self.spec, z, self.rng,
            self.config.nsd_resample_limit, self.opts)
        self.nsd_draws += draws
        if exhausted:
            self.nsd_exhaustions += 1
        self.current_plan = report.plan


class CertaintyEquivalence(_EpisodicStrategy):
    """Plan for the posterior mean (MAP/ridge estimate)."""

    def begin_episode(self, z=None) -> None:
        super().begin_episode(z)
        report = plan_report(self.belief.mu, self.spec, z, self.opts)
        self.current_plan = report.plan


class EpsGreedy(CertaintyEquivalence):
    """Certainty equivalence with per-period uniform dithering.

    The episode-start plan is kept fixed; a perturbed history never
    triggers a replan.
    """

    def price(self, h: int, state):
        if self.rng.random() < self.config.epsilon:
            if self.spec.q == 1:
                return float(self.rng.uniform(0.0, self.spec.p_max))
            return self.rng.uniform(0.0, self.spec.p_max, self.spec.q)
        return super().price(h, state)


class WeakThompson(Strategy):
    """Per-period posterior sample, myopic single-period revenue."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        if self.spec.variant is not Variant.PLAIN:
            raise ValueError("weak-ts supports the plain variant only")

    def price(self, h: int, state):
        theta = self.belief.sample(self.rng)
        params = unpack_params(theta, self.spec)
        j = self.spec.memory_at(h)
        c = float(params.alpha)
        if j > 0:
            c += float(params.phis[j - 1] @ np.asarray(state, dtype=float))
        return myopic_price(c, float(params.beta), self.spec.p_max)

    def observe(self, h: int, price, state, w) -> None:
        row = featurize(price, state, self._z, h, self.spec)
        self.belief = posterior_update(
            self.belief, row[None, :], [float(w)], self.spec.sigma2)


class MemorylessThompson(Strategy):
    """Misspecified two-parameter learner: demand = alpha + beta * price.

    Its belief lives on (alpha, beta) only; the prior is the experiment
    prior marginalized to those coordinates.
    """

    def __init__(self, label, config, spec, prior, rng, opts=None):
        if spec.q != 1:
            raise ValueError("memoryless-ts requires single-product specs")
        mu0, sigma0 = config.prior if config.prior is not None else prior
        if mu0.shape[0] != 2:
            mu0 = mu0[:2]
            sigma0 = sigma0[:2, :2]
        config = StrategyConfig(kind=config.kind, epsilon=config.epsilon,
                                nsd_resample_limit=config.nsd_resample_limit,
                                prior=(mu0, sigma0))
        super().__init__(label, config, spec, (mu0, sigma0), rng, opts)

    def price(self, h: int, state):
        ahat, bhat = self.belief.sample(self.rng)
        return myopic_price(float(ahat), float(bhat), self.spec.p_max)

    def observe(self, h: int, price, state, w) -> None:
        row = np.array([1.0, float(price)])
        self.belief = posterior_update(
            self.belief, row[None, :], [float(w)], self.spec.sigma2)


_CLASSES = {
    "tp": ThompsonPricing,
    "memoryless-ts": MemorylessThompson,
    "weak-ts": WeakThompson,
    "ce": CertaintyEquivalence,
    "eps-greedy": EpsGreedy,
}


def make_strategy(label: str, config: StrategyConfig, spec: ModelSpec,
                  prior: tuple[np.ndarray, np.ndarray], rng,
                  opts: SolveOptions | None = None) -> Strategy:
    return _CLASSES[config.kind](label, config, spec, prior, rng, opts)
