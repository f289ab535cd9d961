import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnlandscape.errors import DivergenceDetected, NoConvergence, StepUnderflow
from nnlandscape.objectives import GParams, hess_G_general
from nnlandscape.optimize import (
    DIVERGENCE_FACTOR,
    OptConfig,
    Trajectory,
    Weights,
    certify,
    gd_population,
    min_hessian_eig,
    normalize_rows,
    sgd,
    step_size,
)


def _quad_source(B, t):
    return 0.5 * float(np.sum(B * B)), B.copy()


def test_sgd_on_quadratic_contracts_geometrically():
    cfg = OptConfig(step0=0.1, plateau_start=10**6, iters=50, log_every=1)
    B0 = np.ones((2, 3))
    w, traj = sgd(_quad_source, B0, cfg)
    np.testing.assert_allclose(w.B, 0.9**50 * B0, rtol=1e-12)
    assert traj.iters == list(range(51))
    assert traj.values[-1] == pytest.approx(0.5 * 6 * 0.9**100, rel=1e-10)


def test_sgd_projection_keeps_unit_rows():
    rng = np.random.default_rng(0)

    def source(B, t):
        return 0.0, rng.standard_normal(B.shape)

    w, _ = sgd(source, rng.standard_normal((4, 5)), OptConfig(step0=0.3, iters=30, project_rows=True))
    np.testing.assert_allclose(np.linalg.norm(w.B, axis=1), 1.0, atol=1e-12)


def test_sgd_trains_output_layer():
    def source(B, a, t):
        return float(a @ a + np.sum(B * B)), 2 * B, 2 * a

    w, traj = sgd(source, Weights(np.ones((2, 2)), np.ones(2)), OptConfig(step0=0.25, iters=10, log_every=5))
    np.testing.assert_allclose(w.a, 0.5**10, rtol=1e-12)
    assert traj.iters == [0, 5, 10]


def test_sgd_deterministic_with_noise():
    cfg = OptConfig(step0=0.1, iters=20, noise_std=0.01, seed=5)
    w1, t1 = sgd(_quad_source, np.ones((3, 3)), cfg)
    w2, t2 = sgd(_quad_source, np.ones((3, 3)), cfg)
    assert np.array_equal(w1.B, w2.B) and t1.values == t2.values


def test_sgd_divergence_detected():
    def source(B, t):
        return -0.5 * float(np.sum(B * B)) * 0 + float(np.sum(B * B)), -10 * B

    with pytest.raises(DivergenceDetected):
        sgd(source, np.ones((2, 2)), OptConfig(step0=1.0, iters=100))
    assert DIVERGENCE_FACTOR == 1e6


def test_sgd_nan_is_divergence():
    with pytest.raises(DivergenceDetected):
        sgd(lambda B, t: (math.nan, B), np.ones((1, 1)), OptConfig(iters=3))


def test_step_schedule():
    cfg = OptConfig(step0=1.0, decay_factor=4.0, decay_every=10, plateau_start=100, iters=200)
    assert step_size(0, cfg) == 1.0
    assert step_size(99, cfg) == 1.0
    assert step_size(100, cfg) == 1.0
    assert step_size(110, cfg) == 0.25
    assert step_size(125, cfg) == 1 / 16


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**5), st.integers(1, 50), st.integers(0, 500))
def test_step_schedule_monotone(t, every, plateau):
    cfg = OptConfig(step0=0.3, decay_every=every, plateau_start=plateau)
    assert step_size(t + 1, cfg) <= step_size(t, cfg)


def test_optconfig_validation():
    for bad in ({"step0": 0.0}, {"decay_factor": 0.5}, {"iters": 0}, {"decay_every": 0}, {"log_every": 0}):
        with pytest.raises(ValueError):
            OptConfig(**bad)


def test_trajectory_csv_round_trip(tmp_path):
    tr = Trajectory()
    tr.append(0, 1.5, math.nan, 0.1)
    tr.append(100, 0.25, 0.3, 1e-12)
    tr.to_csv(tmp_path / "t.csv")
    back = Trajectory.from_csv(tmp_path / "t.csv")
    assert back.iters == tr.iters and back.values == tr.values
    assert math.isnan(back.e_metric[0]) and back.e_metric[1] == 0.3
    with pytest.raises(ValueError):
        tr.append(50, 0, 0, 0)


def test_normalize_rows_keeps_zero_rows():
    B = np.array([[3.0, 4.0], [0.0, 0.0]])
    np.testing.assert_allclose(normalize_rows(B), [[0.6, 0.8], [0, 0]])


def test_gd_population_monotone_and_converges():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((6, 6))
    Q = A @ A.T + np.eye(6)

    def vg(x):
        return 0.5 * float(x @ Q @ x), Q @ x

    x0 = rng.standard_normal(6)
    w = gd_population(vg, x0, step=10.0, iters=2000, grad_tol=1e-10, grow=1.1)
    h = w.info["history"]
    eps = np.finfo(float).eps
    assert all(b <= a + 8 * eps * max(abs(a), 1.0) for a, b in zip(h, h[1:]))
    assert h[-1] < 1e-3 * h[0]
    # with step 1/L the iteration is a plain contraction
    w = gd_population(vg, x0, step=1.0 / np.linalg.eigvalsh(Q)[-1], iters=20000, grad_tol=1e-10)
    assert w.info["grad_norm"] <= 1e-10


def test_gd_population_at_minimum_does_nothing():
    w = gd_population(lambda x: (float(x @ x), 2 * x), np.zeros(3), step=0.1, iters=10, grad_tol=1e-12)
    assert w.info["iters"] == 0 and np.all(w.B == 0)


def test_gd_population_stop_hook():
    calls = []

    def stop(B, v, g):
        calls.append(v)
        return len(calls) == 3

    w = gd_population(lambda x: (float(x @ x), 2 * x), np.ones(2), step=0.1, iters=100, grad_tol=0.0, stop=stop)
    assert w.info["iters"] == 2


def test_gd_population_step_underflow():
    # every move off the start is infinite, so backtracking never succeeds
    x0 = np.ones(2)

    def vg(x):
        return (0.0 if np.array_equal(x, x0) else math.inf), np.full(2, 1e300)

    with pytest.raises(StepUnderflow):
        gd_population(vg, x0, step=1.0, iters=5, grad_tol=0.0)
    with pytest.raises(ValueError):
        gd_population(lambda x: (0.0, x), np.ones(1), step=0.0, iters=1, grad_tol=0.0)


def test_min_hessian_eig_dense_and_iterative_agree():
    rng = np.random.default_rng(2)
    for _ in range(5):
        alpha, beta = rng.uniform(0.5, 2, 5), rng.uniform(0.1, 0.5, 5)
        B = rng.standard_normal((5, 5)) / 2
        H = hess_G_general(B, alpha, beta, 0.1, 1.0)
        lam_d, v = min_hessian_eig(H)
        assert lam_d == pytest.approx(np.linalg.eigvalsh(H)[0], abs=1e-12)
        lam_i, vi = min_hessian_eig(hvp=lambda x: H @ x, dim=25, iters=5000, tol=1e-9)
        assert lam_i == pytest.approx(lam_d, abs=1e-8)
        assert np.linalg.norm(H @ vi - lam_i * vi) <= 1e-8


def test_min_hessian_eig_errors():
    with pytest.raises(ValueError):
        min_hessian_eig()
    with pytest.raises(ValueError):
        min_hessian_eig(hvp=lambda v: v)
    H = np.diag(np.linspace(1.0, 1.0 + 1e-9, 30))
    with pytest.raises(NoConvergence):
        min_hessian_eig(hvp=lambda v: H @ v + 1e-3 * np.sin(np.arange(30.0) * v), dim=30, iters=3, tol=1e-14)


def test_certify_verdicts():
    def prov(H, g):
        return lambda B: (0.0, g, H)

    ok = certify(np.zeros(2), prov(np.eye(2), np.zeros(2)), 1e-3, 0.1)
    assert ok.verdict == "approx-local-min"
    sad = certify(np.zeros(2), prov(np.diag([1.0, -1.0]), np.zeros(2)), 1e-3, 0.1)
    assert sad.verdict == "saddle-direction-found" and sad.min_eig == -1.0
    inc = certify(np.zeros(2), prov(np.eye(2), np.ones(2)), 1e-3, 0.1)
    assert inc.verdict == "inconclusive"
    edge = certify(np.zeros(2), prov(np.diag([1.0, -0.1]), np.zeros(2)), 1e-3, 0.1)
    assert edge.verdict == "approx-local-min"
