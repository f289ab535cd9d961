"""The landscape-designed objective G: population, general and sample forms.

Population G for orthonormal ground truth::

    G(B) = 2 sqrt6 |s4| sum_i a*_i sum_{j!=k} <b*_i,b_j>^2 <b*_i,b_k>^2
           - (|s4| mu / sqrt6) sum_{i,j} a*_i <b*_i,b_j>^4
           + lam sum_j (|b_j|^2 - 1)^2

The sums over ``j != k`` run over ordered pairs.  In the basis of B_star it is
the general form ``G_{alpha,beta,mu}`` with ``alpha = 2 sqrt6 |s4| a*`` and
``beta = |s4| a* / sqrt6``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import Batch, GroundTruth
from ..errors import DimMismatch, EmptyBatch, NotOrthogonal
from ..hermite import relu_coeff, varphi_kernel

__all__ = [
    "GParams",
    "complete_basis",
    "emp_G_value_and_grad",
    "g_weights",
    "grad_G_general",
    "hess_G_general",
    "p_prime",
    "pop_G",
    "pop_G_general",
    "pop_G_grad",
    "pop_G_hess",
    "pop_G_value_grad",
    "single_row_h",
]

SQRT6 = math.sqrt(6.0)
ORTHO_TOL = 1e-8

# Kernel averages estimate half of the displayed pairwise/quartic terms;
# the sample objective doubles them so it is unbiased for G as displayed.
KERNEL_SCALE = 2.0


@dataclass(frozen=True)
class GParams:
    """Objective parameters.

    ``sigma4``/``sigma2`` are the signed Hermite coefficients of the label
    activation (ReLU by default).  ``alpha``/``beta`` are only used by the
    general form.
    """

    mu: float
    lam: float
    sigma4: float = relu_coeff(4)
    sigma2: float = relu_coeff(2)
    alpha: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if self.sigma4 == 0:
            raise ValueError("sigma4 must be nonzero")

    @property
    def sigma4_sign(self) -> float:
        return math.copysign(1.0, self.sigma4)

    @property
    def sigma4_abs(self) -> float:
        return abs(self.sigma4)

    def in_benign_regime(self, a_star, c: float = 0.01) -> bool:
        """mu <= c / kappa and lam >= max(a*) / c."""
        a_star = np.asarray(a_star, float)
        kappa = a_star.max() / a_star.min()
        return bool(self.mu <= c / kappa and self.lam >= a_star.max() / c)


def g_weights(a_star, sigma4_abs: float):
    """(alpha, beta) that turn the general form into G."""
    a_star = np.asarray(a_star, float)
    return 2.0 * SQRT6 * sigma4_abs * a_star, sigma4_abs * a_star / SQRT6


# -- general form -------------------------------------------------------------


def _check_general(B, alpha, beta):
    B = np.asarray(B, float)
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    if B.ndim != 2 or alpha.shape != (B.shape[1],) or beta.shape != (B.shape[1],):
        raise DimMismatch(f"B {B.shape} vs alpha {alpha.shape}, beta {beta.shape}")
    return B, alpha, beta


def pop_G_general(B, alpha, beta, mu: float, lam: float) -> float:
    B, alpha, beta = _check_general(B, alpha, beta)
    Q = B * B
    col = Q.sum(axis=0)
    col2 = (Q * Q).sum(axis=0)
    nrm = Q.sum(axis=1)
    return float(alpha @ (col * col - col2) - mu * beta @ col2 + lam * np.sum((nrm - 1.0) ** 2))


def grad_G_general(B, alpha, beta, mu: float, lam: float) -> np.ndarray:
    B, alpha, beta = _check_general(B, alpha, beta)
    Q = B * B
    col = Q.sum(axis=0)
    nrm = Q.sum(axis=1)
    pair = 4.0 * alpha * B * (col - Q)
    quart = -4.0 * mu * beta * B * Q
    reg = 4.0 * lam * (nrm - 1.0)[:, None] * B
    return pair + quart + reg


def hess_G_general(B, alpha, beta, mu: float, lam: float) -> np.ndarray:
    """Dense (m d) x (m d) Hessian, row-major in (row, coordinate).

    Diagonal block s is the single-row Hessian with
    ``alpha_bar_i = 2 alpha_i sum_{j!=s} B_ji^2`` (ordered pairs count each
    partner twice) and ``beta_bar = mu beta``; block (s, t) for s != t is
    ``8 diag(alpha * b_s * b_t)``.
    """
    B, alpha, beta = _check_general(B, alpha, beta)
    m, d = B.shape
    Q = B * B
    col = Q.sum(axis=0)
    H = np.zeros((m, d, m, d))
    cross = 8.0 * alpha[None, None, :] * B[:, None, :] * B[None, :, :]
    idx = np.arange(d)
    H[:, idx, :, idx] = np.transpose(cross, (2, 0, 1))
    for s in range(m):
        alpha_bar = 2.0 * alpha * (col - Q[s])
        _, _, hs = single_row_h(B[s], alpha_bar, mu * beta, lam)
        H[s, :, s, :] = hs
    return H.reshape(m * d, m * d)


def single_row_h(x, alpha, beta, lam: float):
    """h(x) = sum alpha x^2 - sum beta x^4 + lam (|x|^2 - 1)^2 with gradient and Hessian."""
    x = np.asarray(x, float)
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    x2 = x * x
    sq = float(x @ x) - 1.0
    gamma = 4.0 * lam * sq
    value = float(alpha @ x2 - beta @ (x2 * x2) + lam * sq * sq)
    grad = 2.0 * alpha * x - 4.0 * beta * x2 * x + gamma * x
    hess = np.diag(2.0 * alpha - 12.0 * beta * x2 + gamma) + 8.0 * lam * np.outer(x, x)
    return value, grad, hess


# -- orthonormal ground truth --------------------------------------------------


def complete_basis(B_star) -> np.ndarray:
    """d x d orthogonal matrix whose first m rows are the orthonormal rows of B_star."""
    B_star = np.asarray(B_star, float)
    m, d = B_star.shape
    if m == d:
        return B_star.copy()
    _, _, vt = np.linalg.svd(B_star, full_matrices=True)
    return np.vstack([B_star, vt[m:]])


def _orth_frame(gt: GroundTruth, params: GParams):
    if not gt.is_orthonormal(ORTHO_TOL):
        raise NotOrthogonal("B_star rows are not orthonormal")
    R = complete_basis(gt.B_star)
    alpha, beta = g_weights(gt.a_star, params.sigma4_abs)
    pad = gt.d - gt.m
    return R, np.pad(alpha, (0, pad)), np.pad(beta, (0, pad))


def pop_G(B, gt: GroundTruth, params: GParams) -> float:
    R, alpha, beta = _orth_frame(gt, params)
    return pop_G_general(np.asarray(B, float) @ R.T, alpha, beta, params.mu, params.lam)


def pop_G_grad(B, gt: GroundTruth, params: GParams) -> np.ndarray:
    R, alpha, beta = _orth_frame(gt, params)
    return grad_G_general(np.asarray(B, float) @ R.T, alpha, beta, params.mu, params.lam) @ R


def pop_G_value_grad(B, gt: GroundTruth, params: GParams):
    R, alpha, beta = _orth_frame(gt, params)
    C = np.asarray(B, float) @ R.T
    return (
        pop_G_general(C, alpha, beta, params.mu, params.lam),
        grad_G_general(C, alpha, beta, params.mu, params.lam) @ R,
    )


def pop_G_hess(B, gt: GroundTruth, params: GParams) -> np.ndarray:
    R, alpha, beta = _orth_frame(gt, params)
    B = np.asarray(B, float)
    m = B.shape[0]
    Hc = hess_G_general(B @ R.T, alpha, beta, params.mu, params.lam)
    T = np.kron(np.eye(m), R)
    return T.T @ Hc @ T


def p_prime(B, gt: GroundTruth) -> float:
    """sum_i a*_i sum over unordered pairs j<k of <b*_i,b_j>^2 <b*_i,b_k>^2."""
    Q = (np.asarray(B, float) @ gt.B_star.T) ** 2
    col = Q.sum(axis=0)
    col2 = (Q * Q).sum(axis=0)
    return float(0.5 * gt.a_star @ (col * col - col2))


# -- sample form ----------------------------------------------------------------


def kernel_sums(B, X):
    """Per-sample sums over the rows of B.

    Returns ``(pair, quart, parts)`` where ``pair[s] = sum_{j!=k} phi(b_j,b_k,x_s)``,
    ``quart[s] = sum_j varphi(b_j,x_s)`` and ``parts`` holds reusable pieces.
    Per-sample arrays are laid out rows-of-B by samples (m x n) so that
    per-sample broadcasts run along contiguous memory.
    """
    m = B.shape[0]
    PT = B @ X.T
    nrm = np.einsum("ij,ij->i", B, B)
    K = B @ B.T
    N = nrm.sum()
    P2 = PT * PT
    S2 = np.ones(m) @ P2
    PK = K @ PT
    pkp = np.einsum("ij,ij->j", PK, PT)
    quart = np.full(m, 1.0 / 24.0) @ (P2 * P2) - (nrm / 4.0) @ P2 + float(nrm @ nrm) / 8.0
    full = 0.5 * N * N + np.sum(K * K) - N * S2 - 2.0 * pkp + 0.5 * S2 * S2
    pair = full - 12.0 * quart
    return pair, quart, (PT, P2, S2, PK, nrm, K, N)


def _kernel_grads(B, X, w, c_pair, c_quart, parts):
    """Gradient of ``sum_s w_s (c_pair pair_s + c_quart quart_s)`` with respect to B.

    Collected as ``C X + M B``: C (m x n) holds the weighted per-sample
    coefficients of x and M the m x m coefficients of the rows of B.
    """
    PT, P2, S2, PK, nrm, K, N = parts
    c_q = c_quart - 12.0 * c_pair
    wsum = w.sum()
    # all-pairs expansion contributes -2N p - 4Kp + 2 S2 p; diagonal quartic p^3/6 - n p/2
    coef = P2 * (c_q / 6.0)
    coef += c_pair * (2.0 * S2 - 2.0 * N)
    coef -= (0.5 * c_q * nrm)[:, None]
    coef *= PT
    coef -= (4.0 * c_pair) * PK
    coef *= w
    M = -4.0 * c_pair * ((PT * w) @ PT.T) + 4.0 * c_pair * wsum * K
    diag = c_pair * (2.0 * N * wsum - 2.0 * float(w @ S2)) + 0.5 * c_q * (nrm * wsum - P2 @ w)
    M[np.diag_indices_from(M)] += diag
    return coef @ X + M @ B


def emp_G_value_and_grad(B, batch: Batch, params: GParams):
    """Sample estimate of G and its exact gradient on this batch."""
    B = np.asarray(B, float)
    n = batch.X.shape[0]
    if n == 0:
        raise EmptyBatch("empty batch")
    pair, quart, parts = kernel_sums(B, batch.X)
    scale = KERNEL_SCALE * params.sigma4_sign
    y = batch.y
    nrm = parts[4]
    value = scale * (np.mean(y * pair) - params.mu * np.mean(y * quart))
    value += params.lam * np.sum((nrm - 1.0) ** 2)
    grad = _kernel_grads(B, batch.X, y / n, scale, -scale * params.mu, parts)
    grad += 4.0 * params.lam * (nrm - 1.0)[:, None] * B
    return float(value), grad


def emp_G_terms(B, batch: Batch, params: GParams) -> np.ndarray:
    """Per-sample estimator values (without the deterministic regularizer); for SE."""
    pair, quart, _ = kernel_sums(np.asarray(B, float), batch.X)
    return KERNEL_SCALE * params.sigma4_sign * batch.y * (pair - params.mu * quart)


def varphi_sum(B, X) -> np.ndarray:
    """sum_j varphi(b_j, x_s) per sample (reference implementation)."""
    return varphi_kernel(np.asarray(B, float)[None, :, :], np.asarray(X, float)[:, None, :]).sum(axis=1)
