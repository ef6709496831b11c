import numpy as np
import pytest

from refprice import (ModelSpec, QuadraticProgram, SolveOptions, Variant,
                      build_quadratic, episode_value, grid_oracle, is_nsd,
                      plan, plan_report, solve_box_qp)
from refprice import _kernels
from refprice.planner import quad_value


def plain(H=3, n=1, p_max=1.0):
    return ModelSpec(Variant.PLAIN, H=H, n=n, p_max=p_max)


# ---------------------------------------------------------------------------
# build_quadratic
# ---------------------------------------------------------------------------

def test_build_quadratic_plain_band():
    theta = np.array([1.0, -1.0, 0.5])
    qp = build_quadratic(theta, plain(H=3, n=1))
    expected = np.array([[-1.0, 0.25, 0.0],
                         [0.25, -1.0, 0.25],
                         [0.0, 0.25, -1.0]])
    np.testing.assert_allclose(qp.M, expected, atol=1e-15)
    np.testing.assert_allclose(qp.a, [1.0, 1.0, 1.0])


def test_build_quadratic_memoryless_is_diagonal():
    theta = np.array([2.0, -3.0])
    qp = build_quadratic(theta, plain(H=4, n=0))
    np.testing.assert_allclose(qp.M, -3.0 * np.eye(4))
    np.testing.assert_allclose(qp.a, np.full(4, 2.0))


def test_build_quadratic_multiproduct_q1_matches_plain():
    rng = np.random.default_rng(6)
    theta = rng.normal(size=plain(H=5, n=2).param_dim)
    qp_p = build_quadratic(theta, plain(H=5, n=2))
    qp_m = build_quadratic(theta, ModelSpec(Variant.MULTIPRODUCT, H=5, n=2, q=1))
    np.testing.assert_allclose(qp_m.M, qp_p.M, atol=1e-15)
    np.testing.assert_allclose(qp_m.a, qp_p.a, atol=1e-15)


def test_build_quadratic_matrix_is_symmetric_and_banded():
    rng = np.random.default_rng(77)
    for _ in range(30):
        n = int(rng.integers(0, 4))
        H = n + int(rng.integers(1, 5))
        q = int(rng.integers(1, 3))
        variant = Variant.MULTIPRODUCT if q > 1 else Variant.PLAIN
        spec = ModelSpec(variant, H=H, n=n, q=q)
        theta = rng.normal(size=spec.param_dim)
        qp = build_quadratic(theta, spec)
        np.testing.assert_allclose(qp.M, qp.M.T, atol=1e-12)
        D = qp.M.shape[0]
        for i in range(D):
            for j in range(D):
                if abs(i // q - j // q) > n:
                    assert qp.M[i, j] == 0.0


# ---------------------------------------------------------------------------
# is_nsd
# ---------------------------------------------------------------------------

def test_is_nsd_cases():
    assert is_nsd(-np.eye(3))
    assert not is_nsd(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert is_nsd(np.zeros((2, 2)))


# ---------------------------------------------------------------------------
# solve_box_qp
# ---------------------------------------------------------------------------

def test_solver_1d_vertex():
    qp = QuadraticProgram(M=np.array([[-4.0]]), a=np.array([7.5]), p_max=1.0)
    rep = solve_box_qp(qp)
    assert rep.concave
    np.testing.assert_allclose(rep.plan, [0.9375], atol=1e-9)
    assert rep.value == pytest.approx(3.515625, abs=1e-9)


def test_solver_concave_peak_at_origin():
    qp = QuadraticProgram(M=-np.eye(2), a=np.zeros(2), p_max=1.0)
    rep = solve_box_qp(qp)
    np.testing.assert_allclose(rep.plan, [0.0, 0.0], atol=1e-9)
    assert rep.value == pytest.approx(0.0, abs=1e-12)


def test_solver_vs_grid_on_reference_instance():
    theta = np.array([1.0, -1.0, 0.5])
    qp = build_quadratic(theta, plain(H=3, n=1))
    sol = solve_box_qp(qp)
    grid = grid_oracle(qp, 201)
    assert sol.value >= grid.value - 1e-2
    assert abs(sol.value - grid.value) < 1e-2


def test_solver_feasibility_and_indefinite_flag():
    qp = QuadraticProgram(M=np.array([[0.0, 1.0], [1.0, 0.0]]),
                          a=np.array([0.3, -0.2]), p_max=2.0)
    rep = solve_box_qp(qp)
    assert not rep.concave
    assert np.all(rep.plan >= 0.0) and np.all(rep.plan <= 2.0)
    # best point of x1*x2-ish objective is the (2,2) corner
    assert rep.value >= grid_oracle(qp, 41).value - 1e-8


def test_solver_scaling_invariance():
    rng = np.random.default_rng(12)
    A = rng.normal(size=(4, 4))
    M = -(A @ A.T) - 0.5 * np.eye(4)
    a = rng.normal(size=4)
    qp = QuadraticProgram(M=M, a=a, p_max=1.0)
    base = solve_box_qp(qp)
    for c in (0.5, 3.0, 17.0):
        scaled = solve_box_qp(QuadraticProgram(M=c * M, a=c * a, p_max=1.0))
        np.testing.assert_allclose(scaled.plan, base.plan, atol=1e-6)
        assert scaled.value == pytest.approx(c * base.value, rel=1e-6)


# ---------------------------------------------------------------------------
# grid_oracle
# ---------------------------------------------------------------------------

def test_grid_1d_vertex_on_grid():
    qp = QuadraticProgram(M=np.array([[-1.0]]), a=np.array([1.0]), p_max=1.0)
    rep = grid_oracle(qp, 101)
    np.testing.assert_allclose(rep.plan, [0.5])
    assert rep.value == pytest.approx(0.25)


def test_grid_linear_corner():
    qp = QuadraticProgram(M=np.zeros((2, 2)), a=np.array([1.0, 1.0]),
                          p_max=0.8)
    rep = grid_oracle(qp, 21)
    np.testing.assert_allclose(rep.plan, [0.8, 0.8])


def test_grid_guard():
    qp = QuadraticProgram(M=-np.eye(5), a=np.ones(5), p_max=1.0)
    with pytest.raises(ValueError):
        grid_oracle(qp, 101)  # 101^5 > 1e8


def test_grid_tie_breaks_lexicographically():
    # symmetric objective: maxima at (0,1) and (1,0); lex-smallest wins
    qp = QuadraticProgram(M=np.array([[-1.0, 0.0], [0.0, -1.0]]),
                          a=np.array([1.0, 1.0]), p_max=1.0)
    rep = grid_oracle(qp, 3)  # grid {0, .5, 1}: peak value at (.5,.5)
    np.testing.assert_allclose(rep.plan, [0.5, 0.5])
    qp2 = QuadraticProgram(M=np.zeros((2, 2)), a=np.zeros(2), p_max=1.0)
    rep2 = grid_oracle(qp2, 3)  # constant objective: all tie
    np.testing.assert_allclose(rep2.plan, [0.0, 0.0])


def test_grid_never_beats_solver_on_concave():
    rng = np.random.default_rng(21)
    for _ in range(20):
        D = int(rng.integers(1, 4))
        A = rng.normal(size=(D, D))
        M = -(A @ A.T) - 0.1 * np.eye(D)
        a = rng.normal(size=D) * 2
        qp = QuadraticProgram(M=M, a=a, p_max=1.0)
        sol = solve_box_qp(qp)
        grid = grid_oracle(qp, 21)
        assert grid.value <= sol.value + 1e-8


# ---------------------------------------------------------------------------
# the master identity: p' M p + a' p == episode_value
# ---------------------------------------------------------------------------

def _random_instance(rng):
    variant = list(Variant)[rng.integers(0, 3)]
    n = int(rng.integers(0, 5))
    H = n + int(rng.integers(1, 4))
    q = int(rng.integers(2, 4)) if variant is Variant.MULTIPRODUCT else 1
    m = int(rng.integers(2, 4)) if variant is Variant.COVARIATE else 1
    spec = ModelSpec(variant, H=H, n=n, q=q, m=m, p_max=1.5)
    theta = rng.normal(size=spec.param_dim)
    z = rng.normal(size=m) if variant is Variant.COVARIATE else None
    shape = (H,) if q == 1 else (H, q)
    p = rng.uniform(0, spec.p_max, size=shape)
    return spec, theta, z, p


def test_quadratic_form_identity_1000_random():
    rng = np.random.default_rng(20240811)
    for _ in range(1000):
        spec, theta, z, p = _random_instance(rng)
        qp = build_quadratic(theta, spec, z)
        lhs = quad_value(qp, p.reshape(-1))
        rhs = episode_value(theta, p, z, spec)
        assert abs(lhs - rhs) < 1e-10


def test_solver_value_matches_episode_value_of_plan():
    rng = np.random.default_rng(3)
    for _ in range(25):
        spec, theta, z, _p = _random_instance(rng)
        rep = plan_report(theta, spec, z)
        assert rep.value == pytest.approx(
            episode_value(theta, rep.plan, z, spec), abs=1e-8)


def test_plan_unstacks_multiproduct():
    spec = ModelSpec(Variant.MULTIPRODUCT, H=4, n=1, q=2)
    theta = np.random.default_rng(0).normal(size=spec.param_dim)
    p = plan(theta, spec)
    assert p.shape == (4, 2)
    assert np.all(p >= 0.0) and np.all(p <= spec.p_max)


# ---------------------------------------------------------------------------
# backend equivalence (numba vs numpy fallback)
# ---------------------------------------------------------------------------

def test_backend_paths_agree():
    rng = np.random.default_rng(17)
    A = rng.normal(size=(6, 6))
    M = np.ascontiguousarray(-(A @ A.T) - 0.2 * np.eye(6))
    a = rng.normal(size=6)
    starts = rng.uniform(0, 1, size=(4, 6))
    fast = _kernels.pg_ascent_multi(M, a, 1.0, 0.05, starts, 1e-9, 10_000)
    slow = _kernels.pg_ascent_multi_numpy(M, a, 1.0, 0.05, starts, 1e-9,
                                          10_000)
    np.testing.assert_allclose(fast[0], slow[0], atol=1e-12)
    assert fast[1] == pytest.approx(slow[1], abs=1e-12)

    cands = rng.normal(size=(40, 2 + 6 * 7 // 2))
    cands[:, 1] -= 3.0
    i_fast = _kernels.nsd_scan_plain(np.ascontiguousarray(cands), 8, 6, 1e-10)
    i_slow = _kernels.nsd_scan_plain_numpy(cands, 8, 6, 1e-10)
    assert i_fast == i_slow

    qp = QuadraticProgram(M=M[:3, :3].copy(), a=a[:3].copy(), p_max=1.0)
    v_fast = _kernels.grid_scan(qp.M, qp.a, qp.p_max, 21)
    for other in (_kernels.grid_scan_numpy, _kernels.grid_scan_loop_numpy):
        v_slow = other(qp.M, qp.a, qp.p_max, 21)
        assert v_fast[0] == pytest.approx(v_slow[0], abs=1e-12)
        assert v_fast[1] == v_slow[1]


def test_nsd_scan_agrees_with_build_and_test():
    rng = np.random.default_rng(23)
    spec = plain(H=8, n=3)
    cands = rng.normal(size=(60, spec.param_dim))
    cands[:, 1] -= 2.0
    idx = int(_kernels.nsd_scan_plain(np.ascontiguousarray(cands), spec.H,
                                      spec.n, 1e-10))
    flags = [is_nsd(build_quadratic(c, spec).M) for c in cands]
    expected = flags.index(True) if any(flags) else -1
    assert idx == expected


def test_solve_options_defaults():
    opts = SolveOptions()
    assert opts.tol == 1e-9
    assert opts.max_iter == 10_000
    assert opts.n_starts == 16
