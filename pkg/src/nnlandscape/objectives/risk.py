"""Population l2 risk as a Hermite series of tensor residuals, and the f' surrogate.

Residuals ``f_k = |sum_i a*_i b*_i^{(x)k} - sum_i a_i b_i^{(x)k}|_F^2`` are
evaluated through Gram matrices, never by forming tensors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Batch, GroundTruth
from ..errors import NonUnitRow
from ..hermite import ActivationSpec, relu_coeff

__all__ = [
    "RiskSeries",
    "emp_fprime_loss_and_grad",
    "emp_l2_loss_and_grad",
    "fprime_constant",
    "label_second_moment",
    "pop_fprime",
    "pop_l2_risk",
    "pop_relu_risk",
    "tensor_residual",
]

UNIT_TOL = 1e-8


def _check_unit_rows(B, what):
    dev = np.max(np.abs(np.linalg.norm(B, axis=1) - 1.0))
    if dev > UNIT_TOL:
        raise NonUnitRow(f"{what} rows deviate from unit norm by {dev:.3g}")


def tensor_residual(a, B, a_star, B_star, k: int) -> float:
    """f_k via the Gram expansion."""
    a, a_star = np.asarray(a, float), np.asarray(a_star, float)
    B, B_star = np.atleast_2d(np.asarray(B, float)), np.atleast_2d(np.asarray(B_star, float))
    ss = (B_star @ B_star.T) ** k
    bb = (B @ B.T) ** k
    sb = (B_star @ B.T) ** k
    return float(a_star @ ss @ a_star + a @ bb @ a - 2.0 * a_star @ sb @ a)


def label_second_moment(gt: GroundTruth, act: ActivationSpec, K: int = 60) -> float:
    """E[y^2] for unit-row ground truth, using the activation's dual kernel."""
    _check_unit_rows(gt.B_star, "B_star")
    rho = np.clip(gt.B_star @ gt.B_star.T, -1.0, 1.0)
    return float(gt.a_star @ act.dual_kernel(rho, K) @ gt.a_star + gt.noise_std**2)


@dataclass(frozen=True)
class RiskSeries:
    orders: tuple
    weights: np.ndarray
    residuals: np.ndarray
    constant: float

    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.weights * self.residuals)

    @property
    def value(self) -> float:
        """Truncated series sum, without the additive constant."""
        return float(np.sum(self.weights * self.residuals))

    def term(self, k: int) -> float:
        return float(self.residuals[self.orders.index(k)])


def pop_l2_risk(a, B, gt: GroundTruth, act: ActivationSpec, K: int = 8) -> RiskSeries:
    """Hermite-series decomposition of E[(a.act(Bx) - y)^2] truncated at order K.

    ``constant`` is E[y^2] minus the order <= K energy of the labels.
    """
    B = np.asarray(B, float)
    _check_unit_rows(B, "B")
    _check_unit_rows(gt.B_star, "B_star")
    orders = tuple(range(K + 1))
    weights = np.array([act.coeff(k) ** 2 for k in orders])
    res = np.array([tensor_residual(a, B, gt.a_star, gt.B_star, k) for k in orders])
    gram = gt.B_star @ gt.B_star.T
    energy = sum(w * float(gt.a_star @ gram**k @ gt.a_star) for w, k in zip(weights, orders))
    return RiskSeries(orders, weights, res, label_second_moment(gt, act) - energy)


def fprime_constant(gt: GroundTruth, act: ActivationSpec) -> float:
    """E[y^2] - s2^2 |T_2|^2 - s4^2 |T_4|^2, the additive constant of f'."""
    gram = gt.B_star @ gt.B_star.T
    t2 = float(gt.a_star @ gram**2 @ gt.a_star)
    t4 = float(gt.a_star @ gram**4 @ gt.a_star)
    return label_second_moment(gt, act) - act.coeff(2) ** 2 * t2 - act.coeff(4) ** 2 * t4


def pop_fprime(a, B, gt: GroundTruth, act: ActivationSpec) -> float:
    """s2^2 f_2 + s4^2 f_4 with the label activation's coefficients (constant omitted)."""
    B = np.asarray(B, float)
    _check_unit_rows(B, "B")
    _check_unit_rows(gt.B_star, "B_star")
    f2 = tensor_residual(a, B, gt.a_star, gt.B_star, 2)
    f4 = tensor_residual(a, B, gt.a_star, gt.B_star, 4)
    return act.coeff(2) ** 2 * f2 + act.coeff(4) ** 2 * f4


def _gamma(z, c2, c4):
    z2 = z * z
    return c2 * (z2 - 1.0) / np.sqrt(2.0) + c4 * ((z2 - 6.0) * z2 + 3.0) / np.sqrt(24.0)


def _gamma_prime(z, c2, c4):
    # explicit products; float powers are an order of magnitude slower
    return z * (c2 * np.sqrt(2.0) + c4 * (4.0 * z * z - 12.0) / np.sqrt(24.0))


def emp_fprime_loss_and_grad(a, B, batch: Batch, c2: float | None = None, c4: float | None = None):
    """Mean of (a . gamma(Bx) - y)^2 with gamma = c2 h2 + c4 h4, and its gradients.

    Defaults to ReLU's coefficients.  Returns ``(loss, grad_a, grad_B)``.
    """
    c2 = relu_coeff(2) if c2 is None else c2
    c4 = relu_coeff(4) if c4 is None else c4
    a = np.asarray(a, float)
    B = np.asarray(B, float)
    n = batch.X.shape[0]
    z = batch.X @ B.T
    g = _gamma(z, c2, c4)
    r = g @ a - batch.y
    loss = float(np.mean(r * r))
    grad_a = 2.0 * (g.T @ r) / n
    grad_B = 2.0 * ((r[:, None] * _gamma_prime(z, c2, c4)) * a).T @ batch.X / n
    return loss, grad_a, grad_B


def emp_l2_loss_and_grad(a, B, batch: Batch, act: ActivationSpec):
    """Mean of (a . act(Bx) - y)^2 and its gradients ``(loss, grad_a, grad_B)``."""
    if act.deriv is None:
        raise ValueError(f"activation {act.kind} has no derivative")
    a = np.asarray(a, float)
    B = np.asarray(B, float)
    n = batch.X.shape[0]
    z = batch.X @ B.T
    g = act(z)
    r = g @ a - batch.y
    grad_a = 2.0 * (g.T @ r) / n
    grad_B = 2.0 * ((r[:, None] * act.deriv(z)) * a).T @ batch.X / n
    return float(np.mean(r * r)), grad_a, grad_B


def pop_relu_risk(a, B, gt: GroundTruth, act: ActivationSpec) -> float:
    """Exact E[(a.act(Bx) - y)^2] for a 1-homogeneous activation with a known dual kernel.

    Rows of B and B_star may have any nonzero norm.
    """
    B = np.asarray(B, float)
    a = np.asarray(a, float)

    def cross(P, Q):
        np_ = np.linalg.norm(P, axis=1)
        nq = np.linalg.norm(Q, axis=1)
        rho = (P @ Q.T) / np.outer(np_, nq)
        return np.outer(np_, nq) * act.dual_kernel(np.clip(rho, -1.0, 1.0))

    ss = gt.a_star @ cross(gt.B_star, gt.B_star) @ gt.a_star
    bb = a @ cross(B, B) @ a
    sb = gt.a_star @ cross(gt.B_star, B) @ a
    return float(ss + bb - 2.0 * sb + gt.noise_std**2)
