"""Hermite polynomials, Hermite coefficients of activations and moment kernels.

Everything here is under the standard Gaussian measure: ``<f, g> = E[f(z) g(z)]``
with ``z ~ N(0, 1)``.  ``H_k`` are the probabilists' Hermite polynomials and
``h_k = H_k / sqrt(k!)`` their orthonormal versions.

The three kernels turn samples ``(x, y)`` into unbiased moment estimates::

    varphi(v, x)   = |v|^4/8 - (v.x)^2 |v|^2/4 + (v.x)^4/24
    phi(v, w, x)   = varphi(v+w) + varphi(v-w) - 2 varphi(v) - 2 varphi(w)
    phi2(v, x)     = (v.x)^2 - |v|^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import NodesTooFew

__all__ = [
    "ActivationSpec",
    "coeff_quadrature",
    "gaussian_expectation",
    "hermite_H",
    "hermite_h",
    "hermite_mix",
    "phi2_kernel",
    "phi_kernel",
    "relu",
    "relu_coeff",
    "custom_activation",
    "varphi_kernel",
]

DEFAULT_NODES = 64


def hermite_H(k: int, z):
    """Probabilists' Hermite polynomial ``H_k(z)`` by three-term recurrence."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    z = np.asarray(z, dtype=float)
    prev = np.ones_like(z)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = z.copy()
    for j in range(1, k):
        prev, cur = cur, z * cur - j * prev
    return cur if cur.ndim else float(cur)


def hermite_h(k: int, z):
    """Normalized Hermite polynomial ``h_k = H_k / sqrt(k!)``."""
    return hermite_H(k, z) / math.sqrt(math.factorial(k))


def _double_factorial(n: int) -> int:
    # (-1)!! = 1 by convention
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def relu_coeff(k: int) -> float:
    """Closed-form Hermite coefficient of ReLU.

    Even orders k >= 2 alternate in sign, ``(-1)^(k/2+1) (k-3)!! / sqrt(2 pi k!)``,
    so the 4th coefficient is negative.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return 1.0 / math.sqrt(2.0 * math.pi)
    if k == 1:
        return 0.5
    if k % 2 == 1:
        return 0.0
    sign = 1.0 if (k // 2) % 2 == 1 else -1.0
    if k < 100:
        return sign * _double_factorial(k - 3) / math.sqrt(2.0 * math.pi * math.factorial(k))
    # (2h-1)!! = (2h)! / (2^h h!) with h = (k-2)/2; logs avoid overflow
    h = (k - 2) // 2
    log_df = math.lgamma(2.0 * h + 1.0) - h * math.log(2.0) - math.lgamma(h + 1.0)
    return sign * math.exp(log_df - 0.5 * (math.log(2.0 * math.pi) + math.lgamma(k + 1.0)))


# -- quadrature -------------------------------------------------------------


@lru_cache(maxsize=None)
def _gauss_hermite_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite.hermgauss(nodes)
    # weight e^{-x^2} -> standard normal density
    return np.sqrt(2.0) * x, w / math.sqrt(math.pi)


@lru_cache(maxsize=None)
def _half_gauss_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for the half-normal measure ``phi(z) dz`` on ``[0, inf)``.

    Recurrence coefficients come from the Stieltjes procedure run on a fine
    Gauss-Legendre discretisation of ``[0, 14]``, then Golub-Welsch.
    Weights sum to 1/2.
    """
    t, wt = np.polynomial.legendre.leggauss(600)
    upper = 14.0
    z = 0.5 * upper * (t + 1.0)
    wz = 0.5 * upper * wt * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    alpha = np.zeros(nodes)
    beta = np.zeros(nodes)
    p_prev = np.zeros_like(z)
    p = np.ones_like(z)
    norm_prev = 1.0
    for j in range(nodes):
        norm = np.sum(wz * p * p)
        alpha[j] = np.sum(wz * z * p * p) / norm
        beta[j] = norm / norm_prev if j > 0 else norm
        p_next = (z - alpha[j]) * p - (beta[j] if j > 0 else 0.0) * p_prev
        p_prev, p, norm_prev = p, p_next, norm
        # rescale to dodge overflow; ratios are unaffected
        scale = math.sqrt(np.sum(wz * p * p)) or 1.0
        p_prev = p_prev / scale
        p = p / scale
        norm_prev = norm_prev / scale**2
    jac = np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1) + np.diag(np.sqrt(beta[1:]), -1)
    evals, evecs = np.linalg.eigh(jac)
    weights = beta[0] * evecs[0] ** 2
    return evals, weights


def gaussian_expectation(func: Callable, nodes: int = DEFAULT_NODES, kink_at_zero: bool = False) -> float:
    """``E[func(z)]`` for ``z ~ N(0,1)`` by Gauss quadrature.

    With ``kink_at_zero`` the line is split at the origin and each half uses a
    half-range Hermite rule with ``nodes // 2`` points, so piecewise
    polynomials with a break at zero are integrated exactly.
    """
    if not kink_at_zero:
        z, w = _gauss_hermite_rule(nodes)
        return float(np.sum(w * func(z)))
    z, w = _half_gauss_rule(max(nodes // 2, 1))
    return float(np.sum(w * func(z)) + np.sum(w * func(-z)))


def coeff_quadrature(activation: Callable, k: int, nodes: int = DEFAULT_NODES, kink_at_zero: Optional[bool] = None) -> float:
    """Hermite coefficient ``<activation, h_k>`` by quadrature.

    ``activation`` may be a plain callable or an :class:`ActivationSpec`; in the
    latter case its ``kink_at_zero`` flag picks the split rule.
    """
    if nodes < 2 * k + 2:
        raise NodesTooFew(f"need nodes >= {2 * k + 2} for order {k}, got {nodes}")
    if kink_at_zero is None:
        kink_at_zero = bool(getattr(activation, "kink_at_zero", False))
    fn = activation.fn if isinstance(activation, ActivationSpec) else activation
    return gaussian_expectation(lambda z: fn(z) * hermite_h(k, z), nodes, kink_at_zero)


# -- activations --------------------------------------------------------------


@dataclass(frozen=True)
class ActivationSpec:
    """An activation together with its Hermite coefficients.

    ``dual`` (if known) maps a correlation ``rho`` to ``E[s(u) s(v)]`` for
    rho-correlated standard normals; it gives exact second moments of labels.
    ``homogeneous`` marks positive 1-homogeneity, ``s(r z) = r s(z)`` for r > 0.
    """

    kind: str
    fn: Callable = field(repr=False)
    coeff_fn: Callable[[int], float] = field(repr=False)
    params: tuple = ()
    kink_at_zero: bool = False
    homogeneous: bool = False
    dual: Optional[Callable] = field(default=None, repr=False)
    deriv: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, z):
        return self.fn(z)

    def coeff(self, k: int) -> float:
        return float(self.coeff_fn(k))

    @property
    def sigma4_sign(self) -> float:
        c4 = self.coeff(4)
        if c4 == 0.0:
            raise ValueError("activation has zero 4th Hermite coefficient")
        return math.copysign(1.0, c4)

    def dual_kernel(self, rho, K: int = 60):
        """``E[s(u) s(v)]`` for rho-correlated pairs; series fallback up to order K."""
        rho = np.asarray(rho, dtype=float)
        if self.dual is not None:
            return self.dual(rho)
        out = np.zeros_like(rho)
        for k in range(K + 1):
            c = self.coeff(k)
            if c:
                out = out + c * c * rho**k
        return out


def _relu_fn(z):
    return np.maximum(z, 0.0)


def _relu_deriv(z):
    return (z > 0).astype(float)


def _relu_dual(rho):
    rho = np.clip(rho, -1.0, 1.0)
    return (np.sqrt(1.0 - rho * rho) + rho * (math.pi - np.arccos(rho))) / (2.0 * math.pi)


def relu() -> ActivationSpec:
    return ActivationSpec(
        kind="relu",
        fn=_relu_fn,
        coeff_fn=relu_coeff,
        kink_at_zero=True,
        homogeneous=True,
        dual=_relu_dual,
        deriv=_relu_deriv,
    )


def hermite_mix(c2: float, c4: float) -> ActivationSpec:
    """``c2 h_2 + c4 h_4``; with ReLU's coefficients this is the f' predictor."""

    def fn(z):
        return c2 * hermite_h(2, z) + c4 * hermite_h(4, z)

    def coeff(k):
        return {2: c2, 4: c4}.get(k, 0.0)

    def dual(rho):
        return c2 * c2 * rho**2 + c4 * c4 * rho**4

    def deriv(z):
        return z * (c2 * math.sqrt(2.0) + c4 * (4.0 * z * z - 12.0) / math.sqrt(24.0))

    return ActivationSpec(kind="hermite-mix", fn=fn, coeff_fn=coeff, params=(c2, c4), dual=dual, deriv=deriv)


def custom_activation(fn: Callable, nodes: int = DEFAULT_NODES, kink_at_zero: bool = False, name: str = "custom") -> ActivationSpec:
    @lru_cache(maxsize=None)
    def coeff(k):
        return coeff_quadrature(fn, k, max(nodes, 2 * k + 2), kink_at_zero)

    return ActivationSpec(kind=name, fn=fn, coeff_fn=coeff, kink_at_zero=kink_at_zero)


# -- estimator kernels -------------------------------------------------------------


def varphi_kernel(v, x):
    """Quartic kernel with ``E[H_k(u.x) varphi(v, x)] = <u,v>^4 [k == 4]`` for unit u.

    Broadcasts over leading axes; the last axis is the input dimension.
    """
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    p = np.sum(v * x, axis=-1)
    n = np.sum(v * v, axis=-1)
    p2 = p * p
    return n * n / 8.0 - p2 * n / 4.0 + p2 * p2 / 24.0


def phi_kernel(v, w, x):
    """Pairwise kernel: ``E[s(u.x) phi(v,w,x)] = sqrt(6) s_4 <u,v>^2 <u,w>^2`` for unit u.

    Built from :func:`varphi_kernel`; expanded, the cross term carries
    ``-2 (v.x)(w.x)<v,w>``.  Grouping keeps it exactly symmetric in v, w.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return (varphi_kernel(v + w, x) + varphi_kernel(v - w, x)) - 2.0 * (varphi_kernel(v, x) + varphi_kernel(w, x))


def phi2_kernel(v, x):
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    p = np.sum(v * x, axis=-1)
    return p * p - np.sum(v * v, axis=-1)
