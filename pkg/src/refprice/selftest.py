"""Fast invariant suite behind the ``selftest`` subcommand.

Each check re-derives its expected values from an independent oracle
(dense ridge solve, brute-force grid, direct episode valuation), so a
corrupted implementation fails loudly.  Total runtime stays well under a
minute.
"""

from __future__ import annotations

import numpy as np

from . import planner
from .model import ModelSpec, Variant, episode_value
from .posterior import GaussianBelief, posterior_update


def _random_spec(rng) -> ModelSpec:
    variant = Variant(list(Variant)[rng.integers(0, 3)])
    n = int(rng.integers(0, 4))
    H = int(rng.integers(n + 1, n + 4))
    q = int(rng.integers(2, 4)) if variant is Variant.MULTIPRODUCT else 1
    m = int(rng.integers(2, 4)) if variant is Variant.COVARIATE else 1
    return ModelSpec(variant=variant, H=H, n=n, q=q, m=m,
                     p_max=float(rng.uniform(0.5, 2.0)), sigma2=1.0)


def check_conjugacy(cases: int = 25, seed: int = 7) -> tuple[bool, str]:
    """Batch information-form update vs an independent dense ridge solve."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        dim = int(rng.integers(1, 8))
        rows = int(rng.integers(1, 12))
        sigma2 = float(rng.uniform(0.2, 5.0))
        mu0 = rng.normal(size=dim)
        A = rng.normal(size=(dim, dim))
        sigma0 = A @ A.T + dim * np.eye(dim)
        X = rng.normal(size=(rows, dim))
        w = rng.normal(size=rows)
        belief = posterior_update(GaussianBelief.from_moments(mu0, sigma0),
                                  X, w, sigma2)
        prec = np.linalg.inv(sigma0) + X.T @ X / sigma2
        cov = np.linalg.inv(prec)
        mean = cov @ (np.linalg.inv(sigma0) @ mu0 + X.T @ w / sigma2)
        worst = max(worst,
                    float(np.max(np.abs(belief.mu - mean))),
                    float(np.max(np.abs(belief.sigma - cov))))
    return worst < 1e-8, f"max |diff| = {worst:.3e} over {cases} cases"


def check_quadratic_identity(cases: int = 200, seed: int = 11) -> tuple[bool, str]:
    """x^T M x + a^T x must reproduce episode_value on random instances."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        spec = _random_spec(rng)
        theta = rng.normal(size=spec.param_dim)
        z = rng.normal(size=spec.m) if spec.variant is Variant.COVARIATE else None
        qp = planner.build_quadratic(theta, spec, z)
        shape = (spec.H,) if spec.q == 1 else (spec.H, spec.q)
        p = rng.uniform(0.0, spec.p_max, size=shape)
        lhs = planner.quad_value(qp, p.reshape(-1))
        rhs = episode_value(theta, p, z, spec)
        worst = max(worst, abs(lhs - rhs))
    return worst < 1e-10, f"max |diff| = {worst:.3e} over {cases} instances"


def check_grid_spots(seed: int = 13) -> tuple[bool, str]:
    """Solver vs exhaustive grid on hand-checked and random instances."""
    qp = planner.QuadraticProgram(M=np.array([[-1.0]]), a=np.array([1.0]),
                                  p_max=1.0)
    g = planner.grid_oracle(qp, 101)
    if abs(g.value - 0.25) > 1e-12 or abs(g.plan[0] - 0.5) > 1e-12:
        return False, "1-d vertex spot check failed"
    qp2 = planner.QuadraticProgram(M=np.zeros((2, 2)),
                                   a=np.array([1.0, 1.0]), p_max=0.7)
    g2 = planner.grid_oracle(qp2, 11)
    if np.max(np.abs(g2.plan - 0.7)) > 1e-12:
        return False, "linear corner spot check failed"
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        spec = ModelSpec(variant=Variant.PLAIN, H=3, n=1, p_max=1.0,
                         sigma2=1.0)
        theta = np.array([rng.uniform(0.5, 2.0), rng.uniform(-3.0, -1.0),
                          rng.uniform(-0.5, 0.5)])
        qp3 = planner.build_quadratic(theta, spec)
        sol = planner.solve_box_qp(qp3)
        grid = planner.grid_oracle(qp3, 51)
        worst = max(worst, grid.value - sol.value)
    return worst < 1e-2, f"max (grid - solver) = {worst:.3e}"


CHECKS = (
    ("conjugacy-oracle", check_conjugacy),
    ("quadratic-form-identity", check_quadratic_identity),
    ("grid-oracle-spots", check_grid_spots),
)


def run_selftest(out=print) -> int:
    """Run all checks; returns a process exit code."""
    failed = 0
    for name, check in CHECKS:
        ok, detail = check()
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1
