import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnlandscape.data import (
    ASpec,
    BatchStream,
    GroundTruth,
    make_general_gt,
    make_orthogonal_gt,
    make_rng,
    parse_a_spec,
    sample_batch,
    whitening,
)
from nnlandscape.errors import BadSpec, DimMismatch, RankDeficient
from nnlandscape.hermite import relu

from conftest import mc


def test_identity_instance():
    gt = make_orthogonal_gt(50, 50, "const:1", identity=True)
    assert np.array_equal(gt.B_star, np.eye(50))
    assert np.array_equal(gt.a_star, np.ones(50))


def test_orthogonal_rows():
    gt = make_orthogonal_gt(8, 8, "const:1", seed=3)
    assert np.max(np.abs(gt.B_star @ gt.B_star.T - np.eye(8))) <= 1e-12
    sub = make_orthogonal_gt(8, 3, "uniform:1,2", seed=3)
    assert np.max(np.abs(sub.B_star @ sub.B_star.T - np.eye(3))) <= 1e-12


def test_same_seed_same_gt():
    assert make_orthogonal_gt(6, 6, "loguniform:1,2", seed=9) == make_orthogonal_gt(6, 6, "loguniform:1,2", seed=9)
    assert make_orthogonal_gt(6, 6, "loguniform:1,2", seed=9) != make_orthogonal_gt(6, 6, "loguniform:1,2", seed=10)


def test_haar_first_row_is_uniform_on_sphere():
    # E[q_11^2] = 1/d and the sign of q_11 is balanced under Haar measure
    vals = np.array([make_orthogonal_gt(4, 4, "const:1", seed=s).B_star[0, 0] for s in range(4000)])
    assert abs(np.mean(vals**2) - 0.25) < 0.02
    assert abs(np.mean(np.sign(vals))) < 0.06


@pytest.mark.parametrize("spec", ["const:0", "uniform:-1,2", "uniform:2,1", "bogus:1", "const:1,2", "x"])
def test_bad_a_specs(spec):
    with pytest.raises(BadSpec):
        parse_a_spec(spec)


def test_a_spec_parsing():
    assert parse_a_spec("2.5") == ASpec("const", 2.5, 2.5)
    assert parse_a_spec("uniform:1,2") == ASpec("uniform", 1.0, 2.0)
    a = parse_a_spec("loguniform:1,2").draw(1000, make_rng(0))
    assert np.all((a >= 1) & (a <= 2))


def test_ground_truth_validation():
    with pytest.raises(BadSpec):
        GroundTruth(np.array([1.0, -1.0]), np.eye(2))
    with pytest.raises(DimMismatch):
        GroundTruth(np.ones(3), np.eye(2))
    with pytest.raises(RankDeficient):
        GroundTruth(np.ones(2), np.array([[1.0, 0.0], [2.0, 0.0]]))
    with pytest.raises(BadSpec):
        GroundTruth(np.ones(3), np.ones((3, 2)))


def test_general_gt_condition_and_rank():
    gt = make_general_gt(6, 6, 3.0, "const:1", seed=1)
    s = np.linalg.svd(gt.B_star, compute_uv=False)
    assert s[0] / s[-1] == pytest.approx(3.0, rel=1e-10)
    under = make_general_gt(4, 2, 2.0, "const:1", seed=2)
    assert np.linalg.matrix_rank(under.B_star) == 2
    assert make_general_gt(4, 2, 2.0, "const:1", seed=2) == under


def test_general_gt_cond_one_kappa_M():
    gt = make_general_gt(5, 5, 1.0, "uniform:1,3", seed=4)
    ev = np.linalg.eigvalsh(gt.moment_matrix())
    assert ev[-1] / ev[0] == pytest.approx(gt.kappa, rel=1e-10)
    assert gt.kappa_M() == pytest.approx(gt.kappa, rel=1e-10)


def test_labels_relu_identity():
    gt = make_orthogonal_gt(4, 4, "const:1", identity=True)
    b = sample_batch(gt, relu(), 100, 0)
    np.testing.assert_allclose(b.y, np.maximum(b.X, 0).sum(axis=1), atol=1e-14)


def test_batches_bit_identical_and_stream_deterministic():
    gt = make_orthogonal_gt(5, 5, "const:1", seed=1)
    b1, b2 = sample_batch(gt, relu(), 50, (3, 4)), sample_batch(gt, relu(), 50, (3, 4))
    assert np.array_equal(b1.X, b2.X) and np.array_equal(b1.y, b2.y)
    s1, s2 = BatchStream(gt, relu(), 20, 7), BatchStream(gt, relu(), 20, 7)
    for _ in range(3):
        assert np.array_equal(s1.next().X, s2.next().X)


def test_label_mean():
    gt = make_orthogonal_gt(5, 5, "uniform:1,2", seed=2)
    b = sample_batch(gt, relu(), 10**6, 11)
    mean, se = mc(b.y)
    assert abs(mean - gt.a_star.sum() / math.sqrt(2 * math.pi)) <= 4 * se


def test_label_correlation_half_a():
    gt = make_orthogonal_gt(5, 5, "uniform:1,2", seed=2)
    b = sample_batch(gt, relu(), 10**6, 12)
    for i in range(5):
        mean, se = mc(b.y * (b.X @ gt.B_star[i]))
        assert abs(mean - gt.a_star[i] / 2) <= 4 * se


def test_noise_variance():
    gt = make_orthogonal_gt(3, 3, "const:1", noise_std=0.5, seed=0)
    clean = GroundTruth(gt.a_star, gt.B_star)
    b = sample_batch(gt, relu(), 10**5, 1)
    resid = b.y - sample_batch(clean, relu(), 10**5, 1).y
    assert np.var(resid) == pytest.approx(0.25, rel=0.02)


def test_whitening_trivial_cases():
    gt = make_orthogonal_gt(4, 4, "const:1", identity=True)
    w = whitening(gt)
    np.testing.assert_allclose(w.M, np.eye(4), atol=1e-14)
    assert np.allclose(np.abs(w.W), np.eye(4)[:, np.argmax(np.abs(w.W), axis=0)], atol=1e-12)
    gt4 = make_orthogonal_gt(3, 3, "const:4", identity=True)
    W = whitening(gt4).W
    np.testing.assert_allclose(W @ W.T, np.eye(3) / 4, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 5), st.floats(1.0, 5.0), st.integers(0, 10**6))
def test_whitening_orthonormalizes(m, extra, cond, seed):
    d = m + extra
    gt = make_general_gt(d, m, cond, "uniform:0.5,2", seed=seed)
    w = whitening(gt)
    assert w.check() <= 1e-10
    np.testing.assert_allclose(w.O @ w.O.T, np.eye(m), atol=1e-10)
    # columns of W lie in the row space of B_star
    P = gt.B_star.T @ np.linalg.pinv(gt.B_star.T)
    np.testing.assert_allclose(P @ w.W, w.W, atol=1e-9)


def test_whitening_of_whitened_truth_is_orthogonal():
    gt = make_general_gt(4, 4, 2.0, "uniform:1,2", seed=5)
    w = whitening(gt)
    # rows o_i with weights 1 give M = O^T O = Id, so the next W is orthogonal
    w2 = whitening(GroundTruth(np.ones(4), w.O))
    assert w2.check() <= 1e-10
    np.testing.assert_allclose(w2.W.T @ w2.W, np.eye(4), atol=1e-10)


def test_whitening_rank_deficient():
    gt = GroundTruth(np.array([1.0, 1e-20]), np.eye(2))
    with pytest.raises(RankDeficient):
        whitening(gt)


def test_normalized_keeps_labels():
    gt = make_general_gt(4, 3, 2.0, "uniform:1,2", seed=6)
    gtn = gt.normalized(relu())
    assert gtn.has_unit_rows()
    X = make_rng(1).standard_normal((20, 4))
    from nnlandscape.data import labels

    np.testing.assert_allclose(labels(gt, relu(), X), labels(gtn, relu(), X), rtol=1e-12)
