"""Recovery of the output layer and signed rows from approximately learned weights."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import Batch, GroundTruth, make_rng, sample_batch
from .errors import BadSpec, EmptyBatch, NotOrthogonal, RankDeficient, SingularGram
from .hermite import ActivationSpec, relu
from .landscape import LandscapeReport, classify, greedy_assignment, surrogate_e, tau0, theoretical_D
from .objectives import GParams, pop_F_undercomplete, pop_F_undercomplete_grad, pop_G_hess, pop_G_value_grad
from .optimize import gd_population, normalize_rows

__all__ = [
    "E2EConfig",
    "MODES",
    "RecoveryResult",
    "end_to_end",
    "label_correlations",
    "pair_rows",
    "readout_nonorthogonal",
    "recover_a_general",
    "recover_a_orthogonal",
    "stream_batches",
]

GRAM_COND_MAX = 1e12
PINV_CUTOFF = 1e-12


@dataclass
class RecoveryResult:
    a: np.ndarray
    B_corrected: np.ndarray
    a_err_inf: float = math.nan
    row_err: float = math.nan
    perm: Optional[np.ndarray] = None
    a_se: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"m={self.a.size}",
            f"a_err_inf={self.a_err_inf!r}",
            f"row_err={self.row_err!r}",
        ]
        if self.perm is not None:
            lines.append("perm=" + ",".join(str(int(p)) for p in self.perm))
        for k, v in self.extra.items():
            lines.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
        return "\n".join(lines) + "\n"

    def a_csv(self) -> str:
        return "a\n" + "\n".join(repr(float(v)) for v in self.a) + "\n"


def label_correlations(B, batch, chunk: int = 262144):
    """u_i = 2 E^[y <x, b_i>] and the standard error of each entry.

    ``batch`` is a Batch or an iterable of Batches (streamed in chunks).
    """
    B = np.asarray(B, float)
    batches = [batch] if isinstance(batch, Batch) else batch
    n = 0
    s1 = np.zeros(B.shape[0])
    s2 = np.zeros(B.shape[0])
    for b in batches:
        for lo in range(0, b.X.shape[0], chunk):
            t = 2.0 * b.y[lo : lo + chunk, None] * (b.X[lo : lo + chunk] @ B.T)
            s1 += t.sum(axis=0)
            s2 += (t * t).sum(axis=0)
        n += b.X.shape[0]
    if n == 0:
        raise EmptyBatch("empty batch")
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    se = np.sqrt(var / max(n - 1, 1))
    return mean, se


def stream_batches(gt: GroundTruth, act, n: int, seed, chunk: int = 262144):
    """``n`` samples as a sequence of seeded chunks (bounded memory)."""
    if n < 1:
        raise EmptyBatch("need at least one sample")
    k = 0
    for lo in range(0, n, chunk):
        yield sample_batch(gt, act, min(chunk, n - lo), (*_seed_tuple(seed), k))
        k += 1


def _seed_tuple(seed):
    return tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)


def pair_rows(R, T):
    """Match rows of R to rows of T by |cosine|; returns (perm, signs)."""
    R = np.asarray(R, float)
    T = np.asarray(T, float)
    Rn = R / np.maximum(np.linalg.norm(R, axis=1, keepdims=True), 1e-300)
    Tn = T / np.maximum(np.linalg.norm(T, axis=1, keepdims=True), 1e-300)
    C = Rn @ Tn.T
    perm = greedy_assignment(C)
    signs = np.sign(C[np.arange(R.shape[0]), perm])
    signs[signs == 0] = 1.0
    return perm, signs


def _sign_fix(a_raw, B):
    s = np.sign(a_raw)
    s[s == 0] = 1.0
    return np.abs(a_raw), B * s[:, None]


def _score(res: RecoveryResult, gt: Optional[GroundTruth], B_star=None, a_star=None):
    if gt is None and B_star is None:
        return res
    B_star = gt.B_star if B_star is None else B_star
    a_star = gt.a_star if a_star is None else a_star
    perm, _ = pair_rows(res.B_corrected, B_star)
    res.perm = perm
    res.a_err_inf = float(np.max(np.abs(res.a - a_star[perm])))
    res.row_err = float(np.max(np.linalg.norm(res.B_corrected - B_star[perm], axis=1)))
    return res


def recover_a_orthogonal(B, batch: Batch, gt: Optional[GroundTruth] = None) -> RecoveryResult:
    """a'_i = 2 E^[y <x, b_i>]; a_i = |a'_i| and b_i is flipped to the sign of a'_i.

    When ``gt`` is given the result is scored against the matched ground truth.
    """
    B = np.asarray(B, float)
    u, se = label_correlations(B, batch)
    a, Bc = _sign_fix(u, B)
    return _score(RecoveryResult(a, Bc, a_se=se), gt)


def recover_a_general(B, batch: Batch, gt: Optional[GroundTruth] = None) -> RecoveryResult:
    """a' = (B B^T)^{-1} u with u_i = 2 E^[y <x, b_i>], then the same sign fix."""
    B = np.asarray(B, float)
    gram = B @ B.T
    if np.linalg.cond(gram) > GRAM_COND_MAX:
        raise SingularGram("B B^T is numerically singular")
    u, se = label_correlations(B, batch)
    a_raw = np.linalg.solve(gram, u)
    a, Bc = _sign_fix(a_raw, B)
    # propagate per-entry SE through the solve (entries of u treated as independent)
    ginv = np.linalg.inv(gram)
    a_se = np.sqrt((ginv * ginv) @ (se * se))
    return _score(RecoveryResult(a, Bc, a_se=a_se), gt)


def pinv(B, cutoff: float = PINV_CUTOFF) -> np.ndarray:
    """Pseudo-inverse by SVD, dropping singular values below cutoff * sigma_max."""
    U, s, Vt = np.linalg.svd(np.asarray(B, float), full_matrices=False)
    keep = s > cutoff * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def readout_nonorthogonal(B) -> np.ndarray:
    """Rows of (B^+)^T; at a minimum of F these are close to +-sqrt(a*_i) b*_i."""
    B = np.asarray(B, float)
    s = np.linalg.svd(B, compute_uv=False)
    if s[-1] <= PINV_CUTOFF * s[0] or B.shape[0] > B.shape[1]:
        raise RankDeficient("B must have full row rank")
    if B.shape[0] == B.shape[1]:
        return np.linalg.inv(B).T
    return pinv(B).T


# -- end-to-end pipeline -------------------------------------------------------------

MODES = ("orthogonal-G", "nonorthogonal-F", "undercomplete-F")


@dataclass(frozen=True)
class E2EConfig:
    """Settings for :func:`end_to_end`; ``None`` picks the mode's default.

    Defaults: mu = 0.01 / kappa*; lam = 20 a*_max for G and 1 for F;
    step = 1 / (12 lam) for G and 0.1 for F; delta only enters undercomplete-F.
    """

    mu: Optional[float] = None
    lam: Optional[float] = None
    delta: float = 0.01
    step: Optional[float] = None
    iters: int = 200000
    grad_tol: float = 1e-9
    # SE of each a-entry is about 0.01 / sqrt(n / 1e6); 16e6 samples put 1e-2 beyond 3 SE
    recovery_n: int = 16_000_000
    seed: int = 0


def end_to_end(gt: GroundTruth, mode: str, cfg: E2EConfig = E2EConfig(), act: Optional[ActivationSpec] = None):
    """Optimize the mode's population objective from a random start, read out and score.

    orthogonal-G runs gradient descent on G, classifies the end point and
    recovers a* from ``recovery_n`` fresh samples with the orthogonal
    estimator on the row-normalized weights.  The F modes run gradient
    descent on F (undercomplete-F adds the delta/2 |B|^2 term) and read out
    the rows of (B^+)^T, scored against sqrt(a*_i) b*_i of the unit-row
    equivalent ground truth.  Returns ``(RecoveryResult, LandscapeReport)``.
    """
    if mode not in MODES:
        raise BadSpec(f"unknown mode {mode!r}; expected one of {MODES}")
    act = relu() if act is None else act
    rng = make_rng((cfg.seed, 0xE2E))
    m, d = gt.m, gt.d
    B0 = rng.standard_normal((m, d)) / math.sqrt(d)
    mu = 0.01 / gt.kappa if cfg.mu is None else cfg.mu

    if mode == "orthogonal-G":
        if not gt.is_orthonormal():
            raise NotOrthogonal("orthogonal-G needs orthonormal B_star rows")
        lam = 20.0 * float(gt.a_star.max()) if cfg.lam is None else cfg.lam
        params = GParams(mu=mu, lam=lam)
        step = 1.0 / (12.0 * lam) if cfg.step is None else cfg.step
        w = gd_population(lambda B: pop_G_value_grad(B, gt, params), B0, step, cfg.iters, cfg.grad_tol, grow=1.1)
        D_th = [theoretical_D(a, mu, lam, params.sigma4_abs) for a in gt.a_star]

        def provider(B):
            v, g = pop_G_value_grad(B, gt, params)
            return v, g, pop_G_hess(B, gt, params).reshape(B.size, B.size)

        e = surrogate_e(normalize_rows(w.B @ gt.B_star.T))
        report = classify(
            w.B,
            gt,
            D_th,
            provider=provider,
            tau=tau0(mu, gt.a_star, lam, d),
            extra={"mode": mode, "iters": w.info["iters"], "e": e},
        )
        batches = stream_batches(gt, act, cfg.recovery_n, (cfg.seed, 0xA1))
        res = recover_a_orthogonal(normalize_rows(w.B), batches, gt)
        res.extra.update({"mode": mode, "e": e, "n": cfg.recovery_n})
        return res, report

    if mode == "nonorthogonal-F" and m != d:
        raise BadSpec("nonorthogonal-F needs m == d; use undercomplete-F for m < d")
    if mode == "undercomplete-F" and m >= d:
        raise BadSpec("undercomplete-F needs m < d")
    gtn = gt.normalized(act) if act.homogeneous else gt
    lam = 1.0 if cfg.lam is None else cfg.lam
    params = GParams(mu=mu, lam=lam)
    delta = cfg.delta if mode == "undercomplete-F" else 0.0
    step = 0.1 if cfg.step is None else cfg.step
    w = gd_population(
        lambda B: (pop_F_undercomplete(B, gtn, params, delta), pop_F_undercomplete_grad(B, gtn, params, delta)),
        B0,
        step,
        cfg.iters,
        cfg.grad_tol,
        grow=1.1,
    )
    R = readout_nonorthogonal(w.B)
    target = np.sqrt(gtn.a_star)[:, None] * gtn.B_star
    perm, signs = pair_rows(R, target)
    Rc = R * signs[:, None]
    a = np.sum(Rc * Rc, axis=1)
    res = RecoveryResult(
        a,
        Rc,
        a_err_inf=float(np.max(np.abs(a - gtn.a_star[perm]))),
        row_err=float(np.max(np.linalg.norm(Rc - target[perm], axis=1))),
        perm=perm,
        extra={"mode": mode, "iters": w.info["iters"], "grad_norm": w.info["grad_norm"], "delta": delta},
    )
    report = classify(
        Rc,
        GroundTruth(np.ones(m), target),
        np.ones(m),
        extra={"mode": mode, "iters": w.info["iters"], "grad_norm": w.info["grad_norm"]},
    )
    return res, report
