"""Conjugate Gaussian belief over the demand parameters.

The belief is held in information form (precision Lambda, information
vector b = Lambda @ mu): the conjugate update is then a pure accumulation
and never inverts anything.  Moments (mu, Sigma) and the covariance
Cholesky factor are materialized lazily and cached; beliefs are values,
updates return new objects.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

# Jitter policy for a Cholesky failure on a matrix that should be PD:
# retry once at 1e-10 and once at 1e-8, then give up.
_JITTERS = (0.0, 1e-10, 1e-8)


def _chol_psd(A: np.ndarray, what: str) -> np.ndarray:
    for eps in _JITTERS:
        try:
            return np.linalg.cholesky(A + eps * np.eye(A.shape[0]) if eps else A)
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError(
        f"{what} is not positive definite (jitter up to {_JITTERS[-1]} failed)")


class GaussianBelief:
    """Multivariate normal belief N(mu, Sigma) in information form."""

    __slots__ = ("lam", "b", "_mu", "_sigma", "_chol")

    def __init__(self, lam: np.ndarray, b: np.ndarray):
        lam = np.asarray(lam, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1)
        if lam.shape != (b.shape[0], b.shape[0]):
            raise ValueError("precision/information shapes disagree")
        self.lam = (lam + lam.T) / 2.0
        self.b = b
        self._mu = None
        self._sigma = None
        self._chol = None

    @classmethod
    def from_moments(cls, mu, sigma) -> "GaussianBelief":
        mu = np.asarray(mu, dtype=float).reshape(-1)
        sigma = np.asarray(sigma, dtype=float)
        c = cho_factor((sigma + sigma.T) / 2.0, lower=True)
        lam = cho_solve(c, np.eye(mu.shape[0]))
        belief = cls(lam, lam @ mu)
        # seed the cache with the exact inputs
        belief._mu = mu.copy()
        belief._sigma = (sigma + sigma.T) / 2.0
        return belief

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def _materialize(self) -> None:
        c = cho_factor(self.lam, lower=True)
        eye = np.eye(self.dim)
        sigma = cho_solve(c, eye)
        self._sigma = (sigma + sigma.T) / 2.0
        self._mu = cho_solve(c, self.b)

    @property
    def mu(self) -> np.ndarray:
        if self._mu is None:
            self._materialize()
        return self._mu

    @property
    def sigma(self) -> np.ndarray:
        if self._sigma is None:
            self._materialize()
        return self._sigma

    def chol_cov(self) -> np.ndarray:
        """Lower Cholesky factor of Sigma (cached, jittered on failure)."""
        if self._chol is None:
            self._chol = _chol_psd(self.sigma, "posterior covariance")
        return self._chol

    def sample(self, rng) -> np.ndarray:
        return self.mu + self.chol_cov() @ rng.standard_normal(self.dim)

    def sample_batch(self, rng, count: int) -> np.ndarray:
        """Draw ``count`` samples; row i equals the i-th sequential sample."""
        Z = rng.standard_normal((count, self.dim))
        return self.mu + Z @ self.chol_cov().T


def posterior_update(belief: GaussianBelief, rows, targets,
                     sigma2: float) -> GaussianBelief:
    """Absorb observations w_i = x_i @ theta + N(0, sigma2) noise.

    ``rows`` is an iterable of feature rows (or a 2-D array); for the
    multiproduct variant each period contributes q rows and q targets,
    flattened into the same lists.  An empty batch returns the belief
    unchanged.
    """
    X = np.asarray(rows, dtype=float)
    if X.size == 0:
        return belief
    X = np.atleast_2d(X)
    w = np.asarray(targets, dtype=float).reshape(-1)
    if X.shape[0] != w.shape[0]:
        raise ValueError(
            f"got {X.shape[0]} rows but {w.shape[0]} targets")
    if X.shape[1] != belief.dim:
        raise ValueError(
            f"row width {X.shape[1]} != belief dimension {belief.dim}")
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    lam = belief.lam + (X.T @ X) / sigma2
    b = belief.b + (X.T @ w) / sigma2
    return GaussianBelief(lam, b)


def posterior_sample(belief: GaussianBelief, rng) -> np.ndarray:
    """One draw theta ~ N(mu, Sigma) via mu + L xi."""
    return belief.sample(rng)


def posterior_mean(belief: GaussianBelief) -> np.ndarray:
    return belief.mu.copy()


def belief_to_snapshot(belief: GaussianBelief) -> dict:
    """JSON-serializable (mu, Sigma) snapshot for resumable runs."""
    return {"mu": belief.mu.tolist(), "sigma": belief.sigma.tolist()}


def belief_from_snapshot(snapshot: dict) -> GaussianBelief:
    return GaussianBelief.from_moments(np.array(snapshot["mu"]),
                                       np.array(snapshot["sigma"]))
