"""Episode planning: quadratic reformulation of the episode DP and a
box-constrained QP solver.

For every linear variant the expected episode revenue of a price vector
x (stacked period prices) is exactly  x^T M x + a^T x,  with M banded
(band width n, block width q for multiproduct).  Concave instances
(M negative semi-definite) are solved by projected gradient ascent from
two deterministic starts; indefinite instances fall back to a
deterministic multistart and are flagged as non-certified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import ModelSpec, Variant, unpack_params, _check_z

_NSD_TOL = 1e-10
_START_SEED = 160693  # fixed: multistart points must not vary between runs


@dataclass
class QuadraticProgram:
    """Maximize x^T M x + a^T x over the box [0, p_max]^D."""

    M: np.ndarray
    a: np.ndarray
    p_max: float

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass
class SolveOptions:
    tol: float = 1e-9
    max_iter: int = 10_000
    n_starts: int = 16
    nsd_tol: float = _NSD_TOL


@dataclass
class SolveReport:
    """Outcome of one box-QP solve (x is the flat maximizer)."""

    x: np.ndarray
    plan: np.ndarray
    value: float
    concave: bool
    restarts_used: int
    iterations: int


def build_quadratic(theta, spec: ModelSpec, z=None) -> QuadraticProgram:
    """Assemble (M, a) so that x^T M x + a^T x equals episode_value.

    The band places half of the active reference coefficients phi_j
    (j = min(h-1, n)) symmetrically between period h and the state
    periods it references; the diagonal carries the own-price slope.
    """
    params = unpack_params(theta, spec)
    zv = _check_z(z, spec)
    H, n, q = spec.H, spec.n, spec.q
    if spec.variant is Variant.MULTIPRODUCT:
        D = q * H
        M = np.zeros((D, D))
        beta_sym = (params.beta + params.beta.T) / 2.0
        for h in range(1, H + 1):
            lo = (h - 1) * q
            M[lo:lo + q, lo:lo + q] = beta_sym
            j = min(h - 1, n)
            if j == 0:
                continue
            phi = params.phis[j - 1]  # q x (q*j), state period order
            for t, g in enumerate(range(h - j, h)):
                blk = phi[:, t * q:(t + 1) * q]
                glo = (g - 1) * q
                M[glo:glo + q, lo:lo + q] += 0.5 * blk.T
                M[lo:lo + q, glo:glo + q] += 0.5 * blk
        a = np.tile(np.asarray(params.alpha, dtype=float), H)
        return QuadraticProgram(M, a, spec.p_max)

    diag = params.beta if spec.variant is Variant.PLAIN else float(zv @ params.beta)
    M = np.zeros((H, H))
    np.fill_diagonal(M, diag)
    for h in range(2, H + 1):
        j = min(h - 1, n)
        if j == 0:
            continue
        coeff = params.phis[j - 1]
        if spec.variant is Variant.COVARIATE:
            coeff = zv @ coeff  # row of length j
        c = h - 1
        M[c - j:c, c] = 0.5 * coeff
        M[c, c - j:c] = 0.5 * coeff
    alpha = float(params.alpha)
    a = np.full(H, alpha)
    return QuadraticProgram(M, a, spec.p_max)


def is_nsd(M, tol: float = _NSD_TOL) -> bool:
    """True iff the largest eigenvalue of symmetric M is <= tol."""
    return bool(np.linalg.eigvalsh(M)[-1] <= tol)


def quad_value(qp: QuadraticProgram, x: np.ndarray) -> float:
    return float(x @ (qp.M @ x) + qp.a @ x)


def _starts(qp: QuadraticProgram, concave: bool, n_starts: int) -> np.ndarray:
    M, a, p_max = qp.M, qp.a, qp.p_max
    # unconstrained stationary point of the quadratic, clamped to the box
    interior = np.clip(-0.5 * np.linalg.lstsq(M, a, rcond=None)[0], 0.0, p_max)
    mid = np.full(qp.dim, 0.5 * p_max)
    base = [interior, mid]
    if concave:
        return np.array(base)
    rng = np.random.default_rng(_START_SEED)
    extra = n_starts - len(base)
    n_corner = extra // 2
    corners = rng.integers(0, 2, size=(n_corner, qp.dim)) * p_max
    uniform = rng.uniform(0.0, p_max, size=(extra - n_corner, qp.dim))
    return np.vstack([np.array(base), corners, uniform])


def solve_box_qp(qp: QuadraticProgram, opts: SolveOptions | None = None) -> SolveReport:
    """Maximize the box QP; certified global only when M is NSD."""
    opts = opts or SolveOptions()
    evals = np.linalg.eigvalsh(qp.M)
    concave = bool(evals[-1] <= opts.nsd_tol)
    norm2 = max(abs(float(evals[0])), abs(float(evals[-1])))
    step = 1.0 / (2.0 * (norm2 + 1e-12))
    starts = _starts(qp, concave, opts.n_starts)
    x, val, iters = _kernels.pg_ascent_multi(
        np.ascontiguousarray(qp.M), np.ascontiguousarray(qp.a),
        qp.p_max, step, np.ascontiguousarray(starts), opts.tol, opts.max_iter)
    return SolveReport(x=x, plan=x, value=float(val), concave=concave,
                       restarts_used=starts.shape[0], iterations=int(iters))


def grid_oracle(qp: QuadraticProgram, points_per_dim: int) -> SolveReport:
    """Exhaustive grid maximization (test oracle, lex-smallest tie-break)."""
    if points_per_dim < 2:
        raise ValueError("points_per_dim must be >= 2")
    D = qp.dim
    if D * np.log(points_per_dim) > np.log(1e8):
        raise ValueError(
            f"grid of {points_per_dim}^{D} points exceeds the 1e8 guard")
    val, flat = _kernels.grid_scan(
        np.ascontiguousarray(qp.M), np.ascontiguousarray(qp.a),
        qp.p_max, points_per_dim)
    grid = np.linspace(0.0, qp.p_max, points_per_dim)
    digits = np.zeros(D, dtype=np.int64)
    rem = int(flat)
    for d in range(D - 1, -1, -1):
        digits[d] = rem % points_per_dim
        rem //= points_per_dim
    x = grid[digits]
    return SolveReport(x=x, plan=x, value=float(val),
                       concave=is_nsd(qp.M), restarts_used=0,
                       iterations=points_per_dim ** D)


def plan_report(theta, spec: ModelSpec, z=None,
                opts: SolveOptions | None = None) -> SolveReport:
    """build_quadratic -> solve_box_qp, with the plan shaped (H,) or (H, q)."""
    qp = build_quadratic(theta, spec, z)
    report = solve_box_qp(qp, opts)
    if spec.variant is Variant.MULTIPRODUCT:
        report.plan = report.x.reshape(spec.H, spec.q)
    return report


def plan(theta, spec: ModelSpec, z=None,
         opts: SolveOptions | None = None) -> np.ndarray:
    """Episode-optimal price plan for the given parameters."""
    return plan_report(theta, spec, z, opts).plan
