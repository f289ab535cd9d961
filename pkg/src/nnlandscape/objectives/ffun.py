"""Objective F for non-orthogonal ground truth, and its undercomplete variant.

::

    F(B) = 2 sqrt6 |s4| sum_i a*_i sum_{j!=k} <b*_i,b_j>^2 <b*_i,b_k>^2
           - (|s4| mu / sqrt6) sum_{i,j} a*_i <b*_i,b_j>^4
           + lam sum_j (sum_i a*_i <b_j,b*_i>^2 - 1)^2

Only the regularizer differs from G.  The ground-truth rows are taken as
given; for 1-homogeneous labels with non-unit rows pass
``gt.normalized(act)`` so the sample estimator and F agree.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..data import Batch, GroundTruth
from ..errors import EmptyBatch, OddBatchDropsLast
from .gfun import KERNEL_SCALE, GParams, _kernel_grads, g_weights, kernel_sums

__all__ = [
    "emp_F_value_and_grad",
    "pop_F",
    "pop_F_grad",
    "pop_F_undercomplete",
    "pop_F_undercomplete_grad",
    "pop_F_value_grad",
]


def _f_parts(B, gt: GroundTruth, params: GParams):
    B = np.asarray(B, float)
    C = B @ gt.B_star.T  # C[j, i] = <b_j, b*_i>
    alpha, beta = g_weights(gt.a_star, params.sigma4_abs)
    return B, C, alpha, beta


def pop_F_value_grad(B, gt: GroundTruth, params: GParams):
    B, C, alpha, beta = _f_parts(B, gt, params)
    Q = C * C
    col = Q.sum(axis=0)
    col2 = (Q * Q).sum(axis=0)
    r = Q @ gt.a_star - 1.0
    value = alpha @ (col * col - col2) - params.mu * beta @ col2 + params.lam * r @ r
    gC = 4.0 * alpha * C * (col - Q) - 4.0 * params.mu * beta * C * Q
    gC += 4.0 * params.lam * r[:, None] * gt.a_star * C
    return float(value), gC @ gt.B_star


def pop_F(B, gt: GroundTruth, params: GParams) -> float:
    return pop_F_value_grad(B, gt, params)[0]


def pop_F_grad(B, gt: GroundTruth, params: GParams) -> np.ndarray:
    return pop_F_value_grad(B, gt, params)[1]


def pop_F_undercomplete(B, gt: GroundTruth, params: GParams, delta: float) -> float:
    """F plus (delta/2) |B|_F^2."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    B = np.asarray(B, float)
    return pop_F(B, gt, params) + 0.5 * delta * float(np.sum(B * B))


def pop_F_undercomplete_grad(B, gt: GroundTruth, params: GParams, delta: float) -> np.ndarray:
    if delta < 0:
        raise ValueError("delta must be >= 0")
    B = np.asarray(B, float)
    return pop_F_grad(B, gt, params) + delta * B


def emp_F_value_and_grad(B, batch: Batch, params: GParams, delta: float = 0.0):
    """Sample estimate of F (plus optional (delta/2)|B|^2) and its exact gradient.

    The regularizer needs the square of ``E[y phi2(b,x)] = sqrt2 s2 sum_i a*_i <b*_i,b>^2``;
    it is estimated without bias from split-half pairs (2k, 2k+1).
    """
    B = np.asarray(B, float)
    X, y = batch.X, batch.y
    n = X.shape[0]
    if n < 2:
        raise EmptyBatch("F estimator needs at least two samples")
    if n % 2:
        warnings.warn("odd batch: last sample unused by the paired term", OddBatchDropsLast, stacklevel=2)
    pair, quart, parts = kernel_sums(B, X)
    scale = KERNEL_SCALE * params.sigma4_sign
    value = scale * (np.mean(y * pair) - params.mu * np.mean(y * quart))
    grad = _kernel_grads(B, X, y / n, scale, -scale * params.mu, parts)

    c = math.sqrt(2.0) * params.sigma2
    P = parts[0].T
    nrm = parts[4]
    U = y[:, None] * (P * P - nrm)  # y phi2(b_j, x_s)
    half = n // 2
    Ua, Ub = U[0 : 2 * half : 2], U[1 : 2 * half : 2]
    sq_est = np.mean(Ua * Ub, axis=0) / (c * c)
    lin_est = np.mean(U, axis=0) / c
    value += params.lam * float(np.sum(sq_est - 2.0 * lin_est + 1.0))

    # gradient of y phi2(b_j, x) is y (2 p x - 2 b)
    partner = np.zeros_like(U)
    partner[0 : 2 * half : 2] = Ub
    partner[1 : 2 * half : 2] = Ua
    wq = partner * y[:, None] / (half * c * c)
    wl = np.broadcast_to((-2.0 / (c * n)) * y[:, None], U.shape)
    wt = wq + wl
    grad += params.lam * (2.0 * (wt * P).T @ X - 2.0 * wt.sum(axis=0)[:, None] * B)

    if delta:
        value += 0.5 * delta * float(np.sum(B * B))
        grad = grad + delta * B
    return float(value), grad
