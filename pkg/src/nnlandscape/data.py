"""Planted one-hidden-layer model, Gaussian sampling and whitening.

The model is ``y = a_star . act(B_star x) + noise`` with ``x ~ N(0, I_d)``.
All randomness goes through :func:`make_rng`, a Philox counter-based
generator, so a seed fixes every draw on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import BadSpec, DimMismatch, RankDeficient
from .hermite import ActivationSpec

__all__ = [
    "ASpec",
    "Batch",
    "GroundTruth",
    "Whitening",
    "haar_orthogonal",
    "make_general_gt",
    "make_orthogonal_gt",
    "make_rng",
    "parse_a_spec",
    "sample_batch",
    "whitening",
]

Seed = Union[int, Sequence[int]]


def make_rng(seed: Seed) -> np.random.Generator:
    """Philox generator; ``seed`` may be an int or a tuple of ints (sub-streams)."""
    if isinstance(seed, (int, np.integer)):
        entropy = int(seed)
    else:
        entropy = [int(s) for s in seed]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


# -- output-layer weights ----------------------------------------------------


@dataclass(frozen=True)
class ASpec:
    """How to draw a_star: ``const`` c, ``uniform`` on [lo, hi] or ``loguniform`` on [lo, hi]."""

    kind: str
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in ("const", "uniform", "loguniform"):
            raise BadSpec(f"unknown a-spec kind {self.kind!r}")
        if not (self.lo > 0 and self.hi > 0):
            raise BadSpec("a-spec must admit only positive values")
        if self.hi < self.lo:
            raise BadSpec("a-spec range is empty")

    def draw(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "const":
            return np.full(m, float(self.lo))
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size=m)
        return np.exp(rng.uniform(np.log(self.lo), np.log(self.hi), size=m))

    def __str__(self):
        if self.kind == "const":
            return f"const:{self.lo:g}"
        return f"{self.kind}:{self.lo:g},{self.hi:g}"


def parse_a_spec(spec: Union[str, float, ASpec]) -> ASpec:
    """Parse ``const:1``, ``uniform:1,2``, ``loguniform:1,2`` or a bare number."""
    if isinstance(spec, ASpec):
        return spec
    if isinstance(spec, (int, float)):
        return ASpec("const", float(spec), float(spec))
    text = str(spec).strip()
    kind, _, rest = text.partition(":")
    if not rest:
        try:
            c = float(kind)
        except ValueError:
            raise BadSpec(f"cannot parse a-spec {text!r}") from None
        return ASpec("const", c, c)
    kind = {"range": "uniform", "log": "loguniform"}.get(kind, kind)
    try:
        vals = [float(v) for v in rest.split(",")]
    except ValueError:
        raise BadSpec(f"cannot parse a-spec {text!r}") from None
    if kind == "const":
        if len(vals) != 1:
            raise BadSpec("const a-spec takes one value")
        return ASpec("const", vals[0], vals[0])
    if len(vals) != 2:
        raise BadSpec(f"{kind} a-spec takes lo,hi")
    return ASpec(kind, vals[0], vals[1])


# -- ground truth --------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    a_star: np.ndarray
    B_star: np.ndarray
    noise_std: float = 0.0

    def __post_init__(self):
        a = np.array(self.a_star, dtype=float).reshape(-1)
        B = np.array(self.B_star, dtype=float)
        if B.ndim != 2 or B.shape[0] != a.shape[0]:
            raise DimMismatch(f"a_star has {a.shape[0]} entries, B_star shape {B.shape}")
        if np.any(~np.isfinite(a)) or np.any(a <= 0):
            raise BadSpec("a_star entries must be strictly positive")
        if self.noise_std < 0:
            raise BadSpec("noise_std must be nonnegative")
        m, d = B.shape
        if m > d:
            raise BadSpec(f"need m <= d, got m={m}, d={d}")
        if np.linalg.matrix_rank(B) < m:
            raise RankDeficient("B_star must have full row rank")
        a.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "a_star", a)
        object.__setattr__(self, "B_star", B)
        object.__setattr__(self, "noise_std", float(self.noise_std))

    @property
    def m(self) -> int:
        return self.B_star.shape[0]

    @property
    def d(self) -> int:
        return self.B_star.shape[1]

    @property
    def kappa(self) -> float:
        """max a_star / min a_star."""
        return float(self.a_star.max() / self.a_star.min())

    def is_orthonormal(self, tol: float = 1e-8) -> bool:
        gram = self.B_star @ self.B_star.T
        return bool(np.max(np.abs(gram - np.eye(self.m))) <= tol)

    def has_unit_rows(self, tol: float = 1e-8) -> bool:
        return bool(np.max(np.abs(np.linalg.norm(self.B_star, axis=1) - 1.0)) <= tol)

    def moment_matrix(self) -> np.ndarray:
        """M = sum_i a_star_i b_i b_i^T."""
        return (self.B_star.T * self.a_star) @ self.B_star

    def kappa_M(self) -> float:
        ev = np.linalg.eigvalsh(self.moment_matrix())[::-1][: self.m]
        return float(ev[0] / ev[-1])

    def normalized(self, act: ActivationSpec) -> "GroundTruth":
        """Equivalent ground truth with unit rows, valid for 1-homogeneous activations.

        ``a_i act(b_i . x) = a_i |b_i| act(b_i/|b_i| . x)`` when act is
        positively homogeneous, so labels are unchanged.
        """
        if not act.homogeneous:
            raise BadSpec(f"activation {act.kind} is not positively homogeneous")
        norms = np.linalg.norm(self.B_star, axis=1)
        return GroundTruth(self.a_star * norms, self.B_star / norms[:, None], self.noise_std)

    def __eq__(self, other):
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return (
            np.array_equal(self.a_star, other.a_star)
            and np.array_equal(self.B_star, other.B_star)
            and self.noise_std == other.noise_std
        )

    __hash__ = None


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n orthogonal matrix (QR with sign-fixed R diagonal)."""
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s


def make_orthogonal_gt(d: int, m: int, a_spec, noise_std: float = 0.0, seed: Seed = 0, identity: bool = False) -> GroundTruth:
    """Ground truth with orthonormal rows: first m rows of Id or of a Haar matrix."""
    if not (1 <= m <= d):
        raise BadSpec(f"need 1 <= m <= d, got m={m}, d={d}")
    spec = parse_a_spec(a_spec)
    rng = make_rng(seed)
    a = spec.draw(m, rng)
    if identity:
        B = np.eye(d)[:m]
    else:
        B = haar_orthogonal(d, rng)[:m]
    return GroundTruth(a, B, noise_std)


def make_general_gt(d: int, m: int, cond_target: float, a_spec, noise_std: float = 0.0, seed: Seed = 0) -> GroundTruth:
    """Full-row-rank B_star = U S V^T with log-spaced singular values.

    The singular values run geometrically from sqrt(cond) down to
    1/sqrt(cond), so sigma_max/sigma_min = cond_target.  Rows keep their
    raw norms.
    """
    if not (1 <= m <= d):
        raise BadSpec(f"need 1 <= m <= d, got m={m}, d={d}")
    if cond_target < 1:
        raise BadSpec("cond_target must be >= 1")
    spec = parse_a_spec(a_spec)
    rng = make_rng(seed)
    a = spec.draw(m, rng)
    U = haar_orthogonal(m, rng)
    V = haar_orthogonal(d, rng)[:, :m]
    half = 0.5 * np.log(cond_target)
    s = np.exp(np.linspace(half, -half, m)) if m > 1 else np.ones(1)
    B = (U * s) @ V.T
    return GroundTruth(a, B, noise_std)


# -- samples ---------------------------------------------------------------------


@dataclass(frozen=True)
class Batch:
    X: np.ndarray
    y: np.ndarray
    tag: str = ""

    @property
    def n(self) -> int:
        return self.X.shape[0]


def labels(gt: GroundTruth, act: ActivationSpec, X: np.ndarray) -> np.ndarray:
    """Noiseless labels a_star . act(B_star x) for each row of X."""
    return act(X @ gt.B_star.T) @ gt.a_star


def sample_batch(gt: GroundTruth, act: ActivationSpec, n: int, seed: Seed) -> Batch:
    if n < 1:
        raise BadSpec("batch size must be >= 1")
    rng = make_rng(seed)
    X = rng.standard_normal((n, gt.d))
    y = labels(gt, act, X)
    noise = rng.standard_normal(n)
    if gt.noise_std:
        y = y + gt.noise_std * noise
    return Batch(X, y, tag=f"seed={seed}")


class BatchStream:
    """Fresh batches per step from one seeded generator (deterministic sequence)."""

    def __init__(self, gt: GroundTruth, act: ActivationSpec, n: int, seed: Seed):
        self.gt = gt
        self.act = act
        self.n = n
        self.rng = make_rng(seed)

    def next(self) -> Batch:
        X = self.rng.standard_normal((self.n, self.gt.d))
        y = labels(self.gt, self.act, X)
        if self.gt.noise_std:
            y = y + self.gt.noise_std * self.rng.standard_normal(self.n)
        return Batch(X, y)


# -- whitening --------------------------------------------------------------------


@dataclass(frozen=True)
class Whitening:
    M: np.ndarray
    W: np.ndarray
    O: np.ndarray = field(repr=False)

    def check(self) -> float:
        """max |W^T M W - I|."""
        m = self.W.shape[1]
        return float(np.max(np.abs(self.W.T @ self.M @ self.W - np.eye(m))))


def whitening(gt: GroundTruth) -> Whitening:
    """W = U D^{-1/2} from the top-m eigenpairs of M; O has rows sqrt(a_i) W^T b_i."""
    M = gt.moment_matrix()
    evals, evecs = np.linalg.eigh(M)
    order = np.argsort(-evals, kind="stable")[: gt.m]
    lam = evals[order]
    if lam[-1] <= 1e-12 * lam[0]:
        raise RankDeficient("moment matrix has rank < m")
    U = evecs[:, order]
    W = U / np.sqrt(lam)
    O = (gt.B_star * np.sqrt(gt.a_star)[:, None]) @ W
    return Whitening(M, W, O)
