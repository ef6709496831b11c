import numpy as np
import pytest

from refprice import (GaussianBelief, posterior_mean, posterior_sample,
                      posterior_update)
from refprice.posterior import _chol_psd


class _FixedNormals:
    """rng stub returning a preset standard-normal vector."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def standard_normal(self, size=None):
        return self.values.reshape(size if size is not None else -1)


def _ridge_oracle(mu0, sigma0, X, w, sigma2):
    """Independent dense-solve posterior (textbook ridge form)."""
    prec0 = np.linalg.inv(sigma0)
    prec = prec0 + X.T @ X / sigma2
    cov = np.linalg.inv(prec)
    mean = cov @ (prec0 @ mu0 + X.T @ w / sigma2)
    return mean, cov


def _random_problem(rng, dim=None, rows=None):
    dim = dim or int(rng.integers(1, 9))
    rows = rows if rows is not None else int(rng.integers(1, 15))
    mu0 = rng.normal(size=dim)
    A = rng.normal(size=(dim, dim))
    sigma0 = A @ A.T + dim * np.eye(dim)
    X = rng.normal(size=(rows, dim))
    w = rng.normal(size=rows)
    sigma2 = float(rng.uniform(0.2, 5.0))
    return mu0, sigma0, X, w, sigma2


def test_hand_worked_single_row_update():
    belief = GaussianBelief.from_moments(np.zeros(2), np.eye(2))
    post = posterior_update(belief, np.array([[1.0, 1.0]]), [2.0], 1.0)
    np.testing.assert_allclose(post.mu, [2 / 3, 2 / 3], atol=1e-12)
    np.testing.assert_allclose(
        post.sigma, np.array([[2, -1], [-1, 2]]) / 3, atol=1e-12)


def test_empty_batch_is_identity():
    belief = GaussianBelief.from_moments(np.ones(3), 2 * np.eye(3))
    post = posterior_update(belief, [], [], 1.0)
    np.testing.assert_array_equal(post.mu, belief.mu)
    np.testing.assert_array_equal(post.sigma, belief.sigma)


def test_update_against_ridge_oracle_100_cases():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        mu0, sigma0, X, w, sigma2 = _random_problem(rng)
        post = posterior_update(GaussianBelief.from_moments(mu0, sigma0),
                                X, w, sigma2)
        mean, cov = _ridge_oracle(mu0, sigma0, X, w, sigma2)
        assert np.max(np.abs(post.mu - mean)) < 1e-8
        assert np.max(np.abs(post.sigma - cov)) < 1e-8


def test_batch_equals_sequential():
    rng = np.random.default_rng(77)
    for _ in range(100):
        mu0, sigma0, X, w, sigma2 = _random_problem(rng)
        batch = posterior_update(GaussianBelief.from_moments(mu0, sigma0),
                                 X, w, sigma2)
        seq = GaussianBelief.from_moments(mu0, sigma0)
        for i in range(X.shape[0]):
            seq = posterior_update(seq, X[i][None, :], [w[i]], sigma2)
        scale = max(1.0, float(np.max(np.abs(batch.mu))))
        assert np.max(np.abs(batch.mu - seq.mu)) / scale < 1e-9
        sscale = max(1.0, float(np.max(np.abs(batch.sigma))))
        assert np.max(np.abs(batch.sigma - seq.sigma)) / sscale < 1e-9


def test_row_permutation_invariance():
    rng = np.random.default_rng(31)
    for _ in range(20):
        mu0, sigma0, X, w, sigma2 = _random_problem(rng, rows=8)
        perm = rng.permutation(8)
        a = posterior_update(GaussianBelief.from_moments(mu0, sigma0),
                             X, w, sigma2)
        b = posterior_update(GaussianBelief.from_moments(mu0, sigma0),
                             X[perm], w[perm], sigma2)
        assert np.max(np.abs(a.mu - b.mu)) < 1e-9
        assert np.max(np.abs(a.sigma - b.sigma)) < 1e-9


def test_posterior_contraction():
    rng = np.random.default_rng(55)
    mu0, sigma0, X, w, sigma2 = _random_problem(rng, dim=5, rows=10)
    belief = GaussianBelief.from_moments(mu0, sigma0)
    prev = np.trace(belief.sigma)
    for i in range(X.shape[0]):
        belief = posterior_update(belief, X[i][None, :], [w[i]], sigma2)
        cur = np.trace(belief.sigma)
        assert cur <= prev + 1e-12
        prev = cur


def test_precision_symmetric_and_inverse_consistent():
    rng = np.random.default_rng(8)
    mu0, sigma0, X, w, sigma2 = _random_problem(rng, dim=6, rows=12)
    belief = posterior_update(GaussianBelief.from_moments(mu0, sigma0),
                              X, w, sigma2)
    np.testing.assert_array_equal(belief.lam, belief.lam.T)
    np.testing.assert_allclose(belief.lam @ belief.sigma, np.eye(6),
                               atol=1e-8)


def test_dimension_mismatch_rejected():
    belief = GaussianBelief.from_moments(np.zeros(3), np.eye(3))
    with pytest.raises(ValueError):
        posterior_update(belief, np.ones((1, 2)), [1.0], 1.0)
    with pytest.raises(ValueError):
        posterior_update(belief, np.ones((2, 3)), [1.0], 1.0)


def test_sample_zero_noise_returns_mean():
    belief = GaussianBelief.from_moments([1.0, -2.0], np.eye(2) * 4)
    out = posterior_sample(belief, _FixedNormals(np.zeros(2)))
    np.testing.assert_allclose(out, [1.0, -2.0], atol=1e-14)


def test_sample_identity_cov_unit_vector():
    belief = GaussianBelief.from_moments(np.zeros(3), np.eye(3))
    out = posterior_sample(belief, _FixedNormals([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-14)


def test_sample_moments_5dim():
    rng = np.random.default_rng(99)
    A = rng.normal(size=(5, 5))
    sigma = (A @ A.T) / 5 + 0.5 * np.eye(5)
    sigma = sigma / np.max(np.abs(sigma))  # entries O(1) for the 0.05 bands
    mu = rng.normal(size=5)
    belief = GaussianBelief.from_moments(mu, sigma)
    draws = belief.sample_batch(rng, 100_000)
    assert np.max(np.abs(draws.mean(axis=0) - mu)) < 0.05
    emp_cov = np.cov(draws.T)
    assert np.max(np.abs(emp_cov - sigma)) < 0.05


def test_sample_batch_matches_sequential_draws():
    rng1 = np.random.default_rng(4)
    rng2 = np.random.default_rng(4)
    belief = GaussianBelief.from_moments(np.arange(3.0), np.diag([1, 2, 3.0]))
    batch = belief.sample_batch(rng1, 6)
    seq = np.stack([belief.sample(rng2) for _ in range(6)])
    np.testing.assert_allclose(batch, seq, atol=1e-12)


def test_posterior_mean_is_mu():
    for dim in (2, 5, 14):
        mu = np.arange(dim, dtype=float)
        belief = GaussianBelief.from_moments(mu, np.eye(dim))
        np.testing.assert_allclose(posterior_mean(belief), mu, atol=1e-12)


def test_snapshot_round_trip():
    import json

    from refprice import belief_from_snapshot, belief_to_snapshot

    rng = np.random.default_rng(6)
    mu0, sigma0, X, w, sigma2 = _random_problem(rng, dim=4, rows=6)
    belief = posterior_update(GaussianBelief.from_moments(mu0, sigma0),
                              X, w, sigma2)
    snap = json.loads(json.dumps(belief_to_snapshot(belief)))
    back = belief_from_snapshot(snap)
    np.testing.assert_allclose(back.mu, belief.mu, atol=1e-12)
    np.testing.assert_allclose(back.sigma, belief.sigma, atol=1e-12)


def test_chol_jitter_policy():
    # a matrix that is PD only after the documented jitter
    A = np.diag([1.0, -1e-11])
    L = _chol_psd(A, "test")
    assert np.isfinite(L).all()
    with pytest.raises(np.linalg.LinAlgError):
        _chol_psd(np.diag([1.0, -1.0]), "test")
