"""Classification of stationary points, surrogate error metric and property checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .data import GroundTruth
from .errors import RankDeficient, RegularizerTooWeak
from .optimize import LocalMinCert, Weights, certify

__all__ = [
    "LandscapeReport",
    "check_linear_transform",
    "classify",
    "decompose_dpe",
    "exhaustive_assignment",
    "greedy_assignment",
    "pinv_perturbation_check",
    "spurious_pprime_instance",
    "surrogate_e",
    "surrogate_e_report",
    "tau0",
    "tau0_general",
    "theoretical_D",
]

TOL_E = 1e-4
TOL_D = 1e-3


def greedy_assignment(C: np.ndarray) -> np.ndarray:
    """Conflict-free assignment of rows to columns by decreasing max |entry|.

    Each row takes its largest-|entry| column; when that column is taken it
    takes its best free one.  Returns ``perm`` with ``perm[row] = column``.
    """
    A = np.abs(np.asarray(C, float))
    rows, cols = A.shape
    if rows > cols:
        raise ValueError("more rows than columns")
    order = np.argsort(-A.max(axis=1), kind="stable")
    free = np.ones(cols, dtype=bool)
    perm = np.empty(rows, dtype=int)
    for r in order:
        scores = np.where(free, A[r], -np.inf)
        c = int(np.argmax(scores))
        perm[r] = c
        free[c] = False
    return perm


def exhaustive_assignment(C: np.ndarray) -> np.ndarray:
    """Assignment maximizing the sum of |entries| (small m only)."""
    A = np.abs(np.asarray(C, float))
    rows, cols = A.shape
    best, best_perm = -np.inf, None
    for p in itertools.permutations(range(cols), rows):
        s = A[np.arange(rows), p].sum()
        if s > best:
            best, best_perm = s, p
    return np.array(best_perm, dtype=int)


def _coefficients(B, B_star):
    B = np.asarray(B, float)
    B_star = np.asarray(B_star, float)
    m = B_star.shape[0]
    if np.linalg.matrix_rank(B_star) < m:
        raise RankDeficient("B_star is not full row rank")
    if np.allclose(B_star @ B_star.T, np.eye(m), atol=1e-10):
        return B @ B_star.T
    return B @ np.linalg.pinv(B_star)


def decompose_dpe(B, B_star):
    """Write B = (D P + E) B_star: per-row scale on an assigned component plus residual.

    Returns ``(perm, D, E)``; ``E`` is the coefficient matrix with the
    assigned entries zeroed.
    """
    C = _coefficients(B, B_star)
    perm = greedy_assignment(C)
    rows = np.arange(C.shape[0])
    D = C[rows, perm].copy()
    E = C.copy()
    E[rows, perm] = 0.0
    return perm, D, E


def theoretical_D(a_star_i: float, mu: float, lam: float, sigma4_abs: float) -> float:
    """|D_ii| at a minimum of G: sqrt(1 / (1 - mu |s4| a_i / (sqrt6 lam)))."""
    x = mu * sigma4_abs * a_star_i / (math.sqrt(6.0) * lam)
    if x >= 1.0:
        raise RegularizerTooWeak(f"mu |s4| a / (sqrt6 lam) = {x:.4g} >= 1")
    return math.sqrt(1.0 / (1.0 - x))


def theoretical_D_general(beta_i: float, mu: float, lam: float) -> float:
    """Same fixed point for the general form: sqrt(1 / (1 - mu beta_i / lam))."""
    x = mu * beta_i / lam
    if x >= 1.0:
        raise RegularizerTooWeak(f"mu beta / lam = {x:.4g} >= 1")
    return math.sqrt(1.0 / (1.0 - x))


def surrogate_e(Q) -> float:
    """min(1 - min_i max_j |Q_ij|, 1 - min_j max_i |Q_ij|)."""
    A = np.abs(np.asarray(Q, float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("Q must be square")
    return float(min(1.0 - A.max(axis=1).min(), 1.0 - A.max(axis=0).min()))


def surrogate_e_report(Q) -> dict:
    """e(Q) together with the closeness bound sqrt(2 e) valid when e < 1/3."""
    e = surrogate_e(Q)
    A = np.asarray(Q, float)
    perm = greedy_assignment(A)
    rows = np.arange(A.shape[0])
    P = np.zeros_like(A)
    P[rows, perm] = np.sign(A[rows, perm])
    return {
        "e": e,
        "bound_applies": e < 1.0 / 3.0,
        "bound": math.sqrt(2.0 * max(e, 0.0)) if e < 1.0 / 3.0 else math.inf,
        "dist_inf": float(np.max(np.abs(A - P))),
    }


def tau0(mu: float, a_star, lam: float, d: int, c: float = 0.01) -> float:
    """c min(mu a_min / (kappa d), lam)."""
    a_star = np.asarray(a_star, float)
    kappa = a_star.max() / a_star.min()
    return float(c * min(mu * a_star.min() / (kappa * d), lam))


def tau0_general(mu: float, alpha, beta, lam: float, d: int, c: float = 0.01) -> float:
    """c min(mu beta_min / (kappa_alpha d), mu beta_min^2 / beta_max, lam)."""
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    kappa = alpha.max() / alpha.min()
    return float(c * min(mu * beta.min() / (kappa * d), mu * beta.min() ** 2 / beta.max(), lam))


def spurious_pprime_instance(delta: float = 0.1):
    """Four-dimensional instance where P' has a non-global local minimum with value 1."""
    a = np.array([1.0, 2.0 + delta, 2.0 + delta, 2.0 + delta])
    gt = GroundTruth(a, np.eye(4))
    s = math.sqrt(0.5)
    B = np.array([[1.0, 0, 0, 0], [1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, s, s]])
    return gt, Weights(B)


def check_linear_transform(f: Callable, W, x) -> dict:
    """Compare g(x) = f(W x) against the chain rule and the singular-value sandwiches.

    ``f(y)`` returns ``(value, grad, hess)``.  Derivatives of g are computed
    independently by Richardson-extrapolated central differences of g and of
    the composed gradient.  The sandwiches use f's derivatives restricted to
    the range of W (where f is evaluated).  Slacks are nonnegative when a
    bound holds; the Hessian bounds are checked only when lambda_min(g) < 0.
    """
    W = np.asarray(W, float)
    x = np.asarray(x, float)
    if np.linalg.matrix_rank(W) < W.shape[1]:
        raise RankDeficient("W must have full column rank")
    _, gf, Hf = f(W @ x)
    g_val, gg, Hg = _finite_chain(f, W, x)
    sv = np.linalg.svd(W, compute_uv=False)
    smax, smin = sv[0], sv[-1]
    Qw, _ = np.linalg.qr(W)
    nf = np.linalg.norm(Qw.T @ gf)
    ng = np.linalg.norm(gg)
    lam_g = float(np.linalg.eigvalsh(Hg)[0])
    lam_f = float(np.linalg.eigvalsh(Qw.T @ Hf @ Qw)[0])
    if lam_g < 0:
        lower = float(lam_g - smax**2 * lam_f)
        upper = float(smin**2 * lam_f - lam_g)
    else:
        lower = upper = math.inf
    scale = max(1.0, float(np.max(np.abs(Hg))))
    return {
        "grad_dev": float(np.max(np.abs(gg - W.T @ gf))),
        "hess_dev": float(np.max(np.abs(Hg - W.T @ Hf @ W))),
        "grad_lower_slack": float(ng - smin * nf),
        "grad_upper_slack": float(smax * nf - ng),
        "hess_lower_slack": lower,
        "hess_upper_slack": upper,
        "scale": scale,
        "value": g_val,
    }


def _richardson(fun, x, k, h):
    e = np.zeros(x.size)
    e[k] = h
    d1 = (fun(x + e) - fun(x - e)) / (2 * h)
    e[k] = h / 2
    d2 = (fun(x + e) - fun(x - e)) / h
    return (4.0 * d2 - d1) / 3.0


def _finite_chain(f, W, x, h=1e-3):
    """Gradient/Hessian of g(x) = f(W x) by extrapolated differences (exact for quartics)."""
    n = x.size

    def g(z):
        return f(W @ z)[0]

    def gg(z):
        return W.T @ f(W @ z)[1]

    grad = np.array([_richardson(g, x, k, h) for k in range(n)])
    hess = np.column_stack([_richardson(gg, x, k, h) for k in range(n)])
    return g(x), grad, 0.5 * (hess + hess.T)


def pinv_perturbation_check(A, E):
    """(|(A+E)^+ - A^+|, sqrt2 |A^+| |(A+E)^+| |E|, corollary bound or inf).

    Spectral norms throughout; the corollary 2 sqrt2 |E| / sigma_min(A)^2
    applies when |E| <= sigma_min(A)/2.
    """
    A = np.asarray(A, float)
    E = np.asarray(E, float)
    k = min(A.shape)
    if np.linalg.matrix_rank(A) < k or np.linalg.matrix_rank(A + E) < k:
        raise RankDeficient("A and A+E must have full rank")
    Ap = np.linalg.pinv(A)
    AEp = np.linalg.pinv(A + E)
    nE = np.linalg.norm(E, 2)
    lhs = float(np.linalg.norm(AEp - Ap, 2))
    rhs = float(math.sqrt(2.0) * np.linalg.norm(Ap, 2) * np.linalg.norm(AEp, 2) * nE)
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    cor = float(2.0 * math.sqrt(2.0) * nE / smin**2) if nE <= smin / 2 else math.inf
    return lhs, rhs, cor


@dataclass(frozen=True)
class LandscapeReport:
    perm: np.ndarray
    D: np.ndarray
    D_theory: np.ndarray
    E_inf: float
    d_dev: float
    cert: Optional[LocalMinCert]
    verdict: str
    extra: dict

    def to_text(self) -> str:
        lines = [
            "perm=" + ",".join(str(int(p)) for p in self.perm),
            "D=" + ",".join(repr(float(v)) for v in self.D),
            "D_theory=" + ",".join(repr(float(v)) for v in self.D_theory),
            f"E_inf={self.E_inf!r}",
            f"d_dev={self.d_dev!r}",
        ]
        if self.cert is not None:
            lines += [
                f"grad_norm={self.cert.grad_norm!r}",
                f"min_eig={self.cert.min_eig!r}",
                f"epsilon={self.cert.epsilon!r}",
                f"tau={self.cert.tau!r}",
                f"cert={self.cert.verdict}",
            ]
        for k, v in self.extra.items():
            lines.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
        lines.append(f"verdict={self.verdict}")
        return "\n".join(lines) + "\n"


def classify(
    B,
    gt: GroundTruth,
    D_theory,
    provider: Optional[Callable] = None,
    epsilon: float = 1e-3,
    tau: float = 0.0,
    tol_E: float = TOL_E,
    tol_D: float = TOL_D,
    extra: Optional[dict] = None,
) -> LandscapeReport:
    """Decompose B against gt, compare |D| with the predicted magnitudes and certify.

    ``D_theory[i]`` is the predicted |D| for ground-truth component i.
    """
    perm, D, E = decompose_dpe(B, gt.B_star)
    D_theory = np.asarray(D_theory, float)
    pred = D_theory[perm]
    d_dev = float(np.max(np.abs(D**2 - pred**2))) if D.size else 0.0
    E_inf = float(np.max(np.abs(E))) if E.size else 0.0
    cert = certify(B, provider, epsilon, tau) if provider is not None else None
    if E_inf <= tol_E and d_dev <= tol_D and (cert is None or cert.verdict == "approx-local-min"):
        verdict = "global-min-class"
    elif E_inf <= 0.25:
        verdict = "near-global"
    else:
        verdict = "not-classified"
    return LandscapeReport(perm, D, pred, E_inf, d_dev, cert, verdict, dict(extra or {}))
