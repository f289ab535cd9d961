"""SGD and gradient-descent drivers, step schedule, curvature and certification."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .data import make_rng
from .errors import DivergenceDetected, NoConvergence, StepUnderflow

__all__ = [
    "LocalMinCert",
    "OptConfig",
    "Trajectory",
    "Weights",
    "certify",
    "gd_population",
    "min_hessian_eig",
    "normalize_rows",
    "sgd",
    "step_size",
]

DIVERGENCE_FACTOR = 1e6
DENSE_MAX_DIM = 4096


@dataclass
class Weights:
    B: np.ndarray
    a: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OptConfig:
    step0: float = 0.05
    decay_factor: float = 4.0
    decay_every: int = 5000
    plateau_start: int = 10000
    iters: int = 20000
    batch_size: int = 16384
    project_rows: bool = False
    noise_std: float = 0.0
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if not self.step0 > 0:
            raise ValueError("step0 must be > 0")
        if self.decay_factor < 1:
            raise ValueError("decay_factor must be >= 1")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.decay_every < 1:
            raise ValueError("decay_every must be >= 1")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


def step_size(t: int, cfg: OptConfig) -> float:
    """Constant until plateau_start, then divided by decay_factor every decay_every steps."""
    if t < cfg.plateau_start:
        return cfg.step0
    k = (t - cfg.plateau_start) // cfg.decay_every
    # a negative power underflows to 0 instead of overflowing the divisor
    return cfg.step0 * cfg.decay_factor ** (-k)


@dataclass
class Trajectory:
    iters: list = field(default_factory=list)
    values: list = field(default_factory=list)
    e_metric: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)

    def append(self, it, value, e, gn):
        if self.iters and it <= self.iters[-1]:
            raise ValueError("trajectory iterations must increase")
        self.iters.append(int(it))
        self.values.append(float(value))
        self.e_metric.append(float(e))
        self.grad_norms.append(float(gn))

    def __len__(self):
        return len(self.iters)

    def rows(self):
        return zip(self.iters, self.values, self.e_metric, self.grad_norms)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "value", "e_metric", "grad_norm"])
            for it, v, e, g in self.rows():
                w.writerow([it, repr(v), repr(e), repr(g)])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        tr = cls()
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header != ["iter", "value", "e_metric", "grad_norm"]:
                raise ValueError(f"unexpected trajectory header {header}")
            for row in r:
                tr.append(int(row[0]), float(row[1]), float(row[2]), float(row[3]))
        return tr


def normalize_rows(B: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(B, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return B / nrm


def sgd(
    grad_source: Callable,
    init,
    cfg: OptConfig,
    logger: Optional[Callable] = None,
    metric: Optional[Callable] = None,
    value_fn: Optional[Callable] = None,
):
    """Stochastic gradient descent.

    ``grad_source(B, t)`` returns ``(value, grad)`` on a fresh batch drawn
    from its own seeded stream.  When ``init`` is a Weights with an output
    layer ``a``, the output layer is trained too: ``grad_source(B, a, t)``
    returns ``(value, grad_B, grad_a)`` and the callbacks receive ``(B, a)``.
    ``metric`` fills the e-metric column and ``value_fn`` (for example an
    exact population value) replaces the stochastic value in the log.
    ``logger(record)`` receives every logged row.  Returns ``(Weights, Trajectory)``.
    """
    B = np.array(init.B if isinstance(init, Weights) else init, dtype=float)
    a = None
    if isinstance(init, Weights) and init.a is not None:
        a = np.array(init.a, dtype=float)
    if cfg.project_rows:
        B = normalize_rows(B)
    rng = make_rng((cfg.seed, 0x5D))
    traj = Trajectory()
    ref = None

    def evaluate(t):
        if a is None:
            value, gB = grad_source(B, t)
            ga = None
            args = (B,)
        else:
            value, gB, ga = grad_source(B, a, t)
            args = (B, a)
        gnorm = float(np.sqrt(np.sum(gB * gB) + (0.0 if ga is None else np.sum(ga * ga))))
        logged = value_fn(*args) if value_fn is not None else value
        return logged, gB, ga, gnorm, args

    def log(t, logged, gnorm, args):
        e = metric(*args) if metric is not None else math.nan
        traj.append(t, logged, e, gnorm)
        if logger is not None:
            logger((t, logged, e, gnorm))

    for t in range(cfg.iters):
        logged, gB, ga, gnorm, args = evaluate(t)
        if ref is None:
            ref = max(abs(logged), 1.0)
        if not np.isfinite(logged) or not np.isfinite(gnorm) or logged > DIVERGENCE_FACTOR * ref:
            raise DivergenceDetected(f"objective {logged:.4g} at iteration {t} exceeds {DIVERGENCE_FACTOR:g} x initial")
        if t % cfg.log_every == 0:
            log(t, logged, gnorm, args)
        eta = step_size(t, cfg)
        B = B - eta * gB
        if ga is not None:
            a = a - eta * ga
        if cfg.noise_std:
            B = B + cfg.noise_std * rng.standard_normal(B.shape)
        if cfg.project_rows:
            B = normalize_rows(B)
    logged, _, _, gnorm, args = evaluate(cfg.iters)
    log(cfg.iters, logged, gnorm, args)
    return Weights(B, a), traj


def gd_population(
    value_and_grad: Callable,
    init,
    step: float,
    iters: int,
    grad_tol: float,
    grow: float = 1.0,
    stop: Optional[Callable] = None,
) -> Weights:
    """Gradient descent with step halving whenever the value would increase.

    ``grow`` > 1 lets the step recover after successful moves (capped at the
    initial step).  ``stop(B, value, grad)``, when given, ends the run early
    as soon as it returns True.  The result carries ``info`` with the
    iteration count, final value and gradient norm, and the value history.
    """
    if not step > 0:
        raise ValueError("step must be > 0")
    B = np.array(init.B if isinstance(init, Weights) else init, dtype=float)
    value, grad = value_and_grad(B)
    gnorm = float(np.linalg.norm(grad))
    eta = step
    history = [value]
    it = 0
    while it < iters and gnorm > grad_tol:
        if stop is not None and stop(B, value, grad):
            break
        while True:
            cand = B - eta * grad
            cval, cgrad = value_and_grad(cand)
            # increases at rounding level are not increases
            if cval <= value + 8.0 * np.finfo(float).eps * max(abs(value), 1.0):
                break
            eta *= 0.5
            if eta < 1e-16:
                raise StepUnderflow(f"backtracking step fell below 1e-16 at iteration {it}")
        B, value, grad = cand, cval, cgrad
        gnorm = float(np.linalg.norm(grad))
        history.append(value)
        eta = min(step, eta * grow)
        it += 1
    return Weights(B, info={"iters": it, "value": value, "grad_norm": gnorm, "history": history})


def _dense_min_eig(H):
    evals, evecs = np.linalg.eigh(H)
    return float(evals[0]), evecs[:, 0]


def min_hessian_eig(H=None, hvp: Optional[Callable] = None, dim: Optional[int] = None, iters: int = 500, tol: float = 1e-8, block: int = 24, seed: int = 0):
    """Smallest eigenpair of a symmetric matrix.

    With a dense ``H`` (dimension <= 4096) and no ``hvp`` this is an exact
    symmetric eigendecomposition.  Given ``hvp`` (a Hessian-vector product on
    flat vectors) it runs block power iteration on ``c I - H`` with c the
    max-row-sum bound, Rayleigh-Ritz extraction each sweep, and stops when
    the leading residual ``|H v - lam v|`` drops below ``tol``.
    """
    if hvp is None:
        if H is None:
            raise ValueError("need H or hvp")
        H = np.asarray(H, float)
        if H.shape[0] <= DENSE_MAX_DIM:
            return _dense_min_eig(H)
        hvp = lambda v: H @ v  # noqa: E731
        dim = H.shape[0]
    elif dim is None:
        raise ValueError("dim is required with hvp")

    def apply(V):
        return np.column_stack([hvp(V[:, j]) for j in range(V.shape[1])])

    k = min(block, dim)
    if H is not None:
        shift = float(np.max(np.sum(np.abs(H), axis=1)))
    else:
        # max-row-sum bound needs the columns; probe them once
        cols = apply(np.eye(dim))
        shift = float(np.max(np.sum(np.abs(cols), axis=1)))
    rng = make_rng((seed, 0xE16))
    V, _ = np.linalg.qr(rng.standard_normal((dim, k)))
    lam, vec, res = math.nan, None, math.inf
    for _ in range(iters):
        HV = apply(V)
        T = V.T @ HV
        evals, evecs = np.linalg.eigh(0.5 * (T + T.T))
        V = V @ evecs
        HV = HV @ evecs
        lam, vec = float(evals[0]), V[:, 0]
        res = float(np.linalg.norm(HV[:, 0] - lam * vec))
        if res <= tol:
            return lam, vec / np.linalg.norm(vec)
        V, _ = np.linalg.qr(shift * V - HV)
    raise NoConvergence(f"power iteration residual {res:.3g} after {iters} sweeps")


@dataclass(frozen=True)
class LocalMinCert:
    grad_norm: float
    min_eig: float
    epsilon: float
    tau: float
    verdict: str


def certify(B, provider: Callable, epsilon: float, tau: float) -> LocalMinCert:
    """Check ``|grad| <= epsilon`` and ``lambda_min(hess) >= -tau``.

    ``provider(B)`` returns ``(value, grad, hess)``.
    """
    _, grad, hess = provider(np.asarray(B, float))
    gnorm = float(np.linalg.norm(grad))
    lam, _ = min_hessian_eig(hess)
    if gnorm <= epsilon and lam >= -tau:
        verdict = "approx-local-min"
    elif lam < -tau:
        verdict = "saddle-direction-found"
    else:
        verdict = "inconclusive"
    return LocalMinCert(gnorm, lam, float(epsilon), float(tau), verdict)
