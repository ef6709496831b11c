"""Demand model: specs, parameter layout, state evolution, featurization,
demand sampling and episode valuation.

Three linear variants share one flat parameter encoding:

* plain          theta = [alpha, beta, phi_1, ..., phi_n], phi_i in R^i
* covariate      theta = [alpha, beta (m), vec(phi_1), ..., vec(phi_n)],
                 phi_i an m-by-i matrix stacked column by column
* multiproduct   theta = [alpha (q), vec(beta) (q^2), vec(phi_1), ...],
                 beta q-by-q, phi_i q-by-(q*i), both column-stacked

States are flat arrays of the most recent prices (oldest first), length
q * min(n, h-1) at period h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ContractViolation(ValueError):
    """An argument combination breaks a documented precondition."""


class Variant(str, Enum):
    PLAIN = "plain"
    COVARIATE = "covariate"
    MULTIPRODUCT = "multiproduct"


@dataclass(frozen=True)
class ModelSpec:
    """Dimensions and environment constants of one demand model."""

    variant: Variant
    H: int
    n: int
    q: int = 1
    m: int = 1
    p_max: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.H < 1:
            raise ValueError(f"H must be >= 1, got {self.H}")
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if self.n > self.H:
            raise ValueError(f"n must be <= H, got n={self.n}, H={self.H}")
        if self.q < 1 or self.m < 1:
            raise ValueError("q and m must be >= 1")
        if self.variant is not Variant.MULTIPRODUCT and self.q != 1:
            raise ValueError("q > 1 requires the multiproduct variant")
        if self.variant is not Variant.COVARIATE and self.m != 1:
            raise ValueError("m > 1 requires the covariate variant")
        if self.p_max <= 0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def param_dim(self) -> int:
        tri = self.n * (self.n + 1) // 2
        if self.variant is Variant.PLAIN:
            return 2 + tri
        if self.variant is Variant.COVARIATE:
            return 1 + self.m + self.m * tri
        return self.q + self.q * self.q + self.q * self.q * tri

    def state_len(self, h: int) -> int:
        """Entries in the price-history state at period h (flat length)."""
        return self.q * min(self.n, h - 1)

    def memory_at(self, h: int) -> int:
        """Index j of the reference-effect block active at period h."""
        return min(h - 1, self.n)


@dataclass
class Params:
    """Unpacked view of a flat parameter vector."""

    alpha: np.ndarray | float
    beta: np.ndarray | float
    phis: list[np.ndarray] = field(default_factory=list)


def empty_state() -> np.ndarray:
    return np.zeros(0)


def _price_vec(price, spec: ModelSpec) -> np.ndarray:
    p = np.atleast_1d(np.asarray(price, dtype=float))
    if p.shape != (spec.q,):
        raise ContractViolation(
            f"price must have {spec.q} component(s), got shape {p.shape}")
    return p


def _check_price(price, spec: ModelSpec) -> np.ndarray:
    p = _price_vec(price, spec)
    if np.any(p < 0.0) or np.any(p > spec.p_max):
        raise ValueError(
            f"price {price} outside [0, {spec.p_max}]")
    return p


def _check_state(state, h: int, spec: ModelSpec) -> np.ndarray:
    s = np.asarray(state, dtype=float).reshape(-1)
    want = spec.state_len(h)
    if s.shape[0] != want:
        raise ContractViolation(
            f"state length {s.shape[0]} does not match period h={h} "
            f"(expected {want})")
    return s


def _check_z(z, spec: ModelSpec) -> np.ndarray | None:
    if spec.variant is Variant.COVARIATE:
        if z is None:
            raise ContractViolation("covariate variant requires z")
        zv = np.asarray(z, dtype=float).reshape(-1)
        if zv.shape[0] != spec.m:
            raise ContractViolation(
                f"z must have {spec.m} components, got {zv.shape[0]}")
        return zv
    if z is not None:
        raise ContractViolation(f"{spec.variant.value} variant takes no z")
    return None


def advance_state(state, price, spec: ModelSpec) -> np.ndarray:
    """Append the period's price to the history, keeping at most n entries."""
    p = _check_price(price, spec)
    if spec.n == 0:
        return empty_state()
    s = np.asarray(state, dtype=float).reshape(-1)
    out = np.concatenate([s, p])
    max_len = spec.n * spec.q
    if out.shape[0] > max_len:
        out = out[out.shape[0] - max_len:]
    return out


def param_dim(spec: ModelSpec) -> int:
    return spec.param_dim


def unpack_params(theta, spec: ModelSpec) -> Params:
    """Split a flat parameter vector into (alpha, beta, phi_1..phi_n)."""
    th = np.asarray(theta, dtype=float).reshape(-1)
    if th.shape[0] != spec.param_dim:
        raise ContractViolation(
            f"theta has length {th.shape[0]}, spec implies {spec.param_dim}")
    n, q, m = spec.n, spec.q, spec.m
    if spec.variant is Variant.PLAIN:
        alpha, beta = th[0], th[1]
        phis, off = [], 2
        for i in range(1, n + 1):
            phis.append(th[off:off + i].copy())
            off += i
        return Params(alpha, beta, phis)
    if spec.variant is Variant.COVARIATE:
        alpha = th[0]
        beta = th[1:1 + m].copy()
        phis, off = [], 1 + m
        for i in range(1, n + 1):
            phis.append(th[off:off + m * i].reshape(m, i, order="F").copy())
            off += m * i
        return Params(alpha, beta, phis)
    alpha = th[:q].copy()
    beta = th[q:q + q * q].reshape(q, q, order="F").copy()
    phis, off = [], q + q * q
    for i in range(1, n + 1):
        phis.append(th[off:off + q * q * i].reshape(q, q * i, order="F").copy())
        off += q * q * i
    return Params(alpha, beta, phis)


def pack_params(params: Params, spec: ModelSpec) -> np.ndarray:
    """Inverse of unpack_params (exact round-trip)."""
    parts: list[np.ndarray] = []
    if spec.variant is Variant.PLAIN:
        parts.append(np.array([params.alpha, params.beta], dtype=float))
        for phi in params.phis:
            parts.append(np.asarray(phi, dtype=float).reshape(-1))
    elif spec.variant is Variant.COVARIATE:
        parts.append(np.array([params.alpha], dtype=float))
        parts.append(np.asarray(params.beta, dtype=float).reshape(-1))
        for phi in params.phis:
            parts.append(np.asarray(phi, dtype=float).reshape(-1, order="F"))
    else:
        parts.append(np.asarray(params.alpha, dtype=float).reshape(-1))
        parts.append(np.asarray(params.beta, dtype=float).reshape(-1, order="F"))
        for phi in params.phis:
            parts.append(np.asarray(phi, dtype=float).reshape(-1, order="F"))
    theta = np.concatenate(parts) if parts else np.zeros(0)
    if theta.shape[0] != spec.param_dim:
        raise ContractViolation(
            f"packed length {theta.shape[0]} does not match spec "
            f"({spec.param_dim})")
    return theta


def expected_demand(theta, price, state, z, h: int, spec: ModelSpec):
    """Mean log-scale demand at period h for the given price and history.

    Returns a float (q = 1) or a length-q vector.  The linear form is
    evaluated directly from the unpacked parameters, independently of
    featurize, so the two can cross-check each other.
    """
    params = unpack_params(theta, spec)
    s = _check_state(state, h, spec)
    zv = _check_z(z, spec)
    j = spec.memory_at(h)
    if spec.variant is Variant.PLAIN:
        p = float(np.asarray(price).reshape(()))
        d = params.alpha + params.beta * p
        if j > 0:
            d += params.phis[j - 1] @ s
        return float(d)
    if spec.variant is Variant.COVARIATE:
        p = float(np.asarray(price).reshape(()))
        d = params.alpha + (zv @ params.beta) * p
        if j > 0:
            d += zv @ params.phis[j - 1] @ s
        return float(d)
    p = _price_vec(price, spec)
    d = params.alpha + params.beta @ p
    if j > 0:
        d = d + params.phis[j - 1] @ s
    return d


def featurize(price, state, z, h: int, spec: ModelSpec) -> np.ndarray:
    """Feature row(s) x such that x @ theta == expected_demand exactly.

    Plain/covariate: a flat row of length param_dim.  Multiproduct: a
    (q, param_dim) matrix.  Zero blocks pad the inactive phi slots; the
    active slot is phi_{h-1} for 2 <= h <= n and phi_n for h >= n + 1.
    """
    s = _check_state(state, h, spec)
    zv = _check_z(z, spec)
    j = spec.memory_at(h)
    n, q, m = spec.n, spec.q, spec.m
    dim = spec.param_dim
    if spec.variant is Variant.PLAIN:
        p = float(np.asarray(price).reshape(()))
        row = np.zeros(dim)
        row[0] = 1.0
        row[1] = p
        if j > 0:
            off = 2 + j * (j - 1) // 2
            row[off:off + j] = s
        return row
    if spec.variant is Variant.COVARIATE:
        p = float(np.asarray(price).reshape(()))
        row = np.zeros(dim)
        row[0] = 1.0
        row[1:1 + m] = p * zv
        if j > 0:
            off = 1 + m + m * j * (j - 1) // 2
            row[off:off + m * j] = np.kron(s, zv)
        return row
    p = _price_vec(price, spec)
    X = np.zeros((q, dim))
    X[:, :q] = np.eye(q)
    X[:, q:q + q * q] = np.kron(p.reshape(1, q), np.eye(q))
    if j > 0:
        off = q + q * q + q * q * j * (j - 1) // 2
        X[:, off:off + q * q * j] = np.kron(s.reshape(1, -1), np.eye(q))
    return X


def sample_demand(rng, d, sigma2: float, xi=None):
    """Draw (y, w) for expected log-scale demand d.

    w | d is N(d, sigma2) and y = exp(w - sigma2 / 2), so that
    log(y) + sigma2 / 2 == w exactly.  ``xi`` injects the standard-normal
    draw (used for common-random-number pairing and zero-noise tests).
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    d = np.asarray(d, dtype=float)
    if xi is None:
        xi = rng.standard_normal(d.shape)
    else:
        xi = np.asarray(xi, dtype=float).reshape(d.shape)
    w = d + np.sqrt(sigma2) * xi
    y = np.exp(w - sigma2 / 2.0)
    if d.ndim == 0:
        return float(y), float(w)
    return y, w


def validate_plan(plan, spec: ModelSpec) -> np.ndarray:
    """Check and normalize a price plan to shape (H,) or (H, q)."""
    p = np.asarray(plan, dtype=float)
    if spec.q == 1:
        p = p.reshape(-1)
        if p.shape[0] != spec.H:
            raise ContractViolation(
                f"plan length {p.shape[0]} != H={spec.H}")
    else:
        p = p.reshape(spec.H, spec.q)
    if np.any(p < 0.0) or np.any(p > spec.p_max):
        raise ValueError("plan has prices outside the box")
    return p


def episode_value(theta, plan, z, spec: ModelSpec) -> float:
    """Expected episode revenue: sum over periods of price times demand."""
    p = validate_plan(plan, spec)
    state = empty_state()
    total = 0.0
    for h in range(1, spec.H + 1):
        ph = p[h - 1]
        d = expected_demand(theta, ph, state, z, h, spec)
        total += float(np.dot(np.atleast_1d(ph), np.atleast_1d(d)))
        state = advance_state(state, ph, spec)
    return total


@dataclass
class Observation:
    """One period's interaction record."""

    episode: int
    period: int
    price: np.ndarray | float
    state: np.ndarray
    y: np.ndarray | float
    w: np.ndarray | float
    z: np.ndarray | None = None
