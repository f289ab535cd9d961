"""Figure reproductions, landscape runs on G, and the gradient-concentration sweep."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .data import ASpec, BatchStream, GroundTruth, make_orthogonal_gt, make_rng, sample_batch
from .hermite import relu
from .landscape import LandscapeReport, classify, decompose_dpe, surrogate_e, tau0, theoretical_D
from .objectives import (
    GParams,
    emp_fprime_loss_and_grad,
    emp_G_value_and_grad,
    emp_l2_loss_and_grad,
    pop_fprime,
    pop_G,
    pop_G_grad,
    pop_G_hess,
    pop_G_value_grad,
    pop_relu_risk,
)
from .optimize import OptConfig, Trajectory, Weights, gd_population, min_hessian_eig, normalize_rows, sgd

__all__ = [
    "FIGURES",
    "FigureSetup",
    "FigureRun",
    "figure_setup",
    "grad_concentration",
    "landscape_params",
    "landscape_run",
    "repro",
    "run_figure_seed",
    "write_panels",
]

FIGURES = ("fig1", "fig2", "fig3")


@dataclass(frozen=True)
class FigureSetup:
    """One figure's protocol.

    ``mode`` is relu-l2 (ReLU predictor, output layer fixed at a*), h2h4
    (c2 h2 + c4 h4 predictor with ReLU's coefficients, a and B trained, rows
    projected) or G (empirical G).
    """

    name: str
    mode: str
    d: int
    cfg: OptConfig
    mu: float = 0.0
    lam: float = 0.0


def _cfg(step0, batch, iters, plateau, every, project):
    return OptConfig(
        step0=step0,
        decay_factor=4.0,
        decay_every=every,
        plateau_start=plateau,
        iters=iters,
        batch_size=batch,
        project_rows=project,
        log_every=100,
    )


_DESK = {
    "fig1": FigureSetup("fig1", "relu-l2", 20, _cfg(0.1, 256, 20000, 10000, 5000, False)),
    # f' reaches its noise floor early; faster decay after 5000 steps buys the last decade of loss
    "fig2": FigureSetup("fig2", "h2h4", 10, _cfg(0.1, 2048, 10000, 5000, 1250, True)),
    # 16384-sample G batches cost ~10 ms each on one core; 8000 steps keep
    # five seeds inside the desk time budget
    "fig3": FigureSetup("fig3", "G", 10, _cfg(0.01, 16384, 8000, 4000, 1000, False), mu=0.01, lam=2.0),
}

# 80000 steps = 10000 at step0 followed by 14 divisions by 4 (final step below 1e-9).
# The curvature of both the ReLU risk and G grows with the width, so the
# fig1/fig3 starting steps shrink with d (0.1 and 0.01 diverge at d = 50).
_PAPER = {
    "fig1": FigureSetup("fig1", "relu-l2", 50, _cfg(0.04, 256, 80000, 10000, 5000, False)),
    "fig2": FigureSetup("fig2", "h2h4", 50, _cfg(0.1, 8192, 80000, 10000, 5000, True)),
    "fig3": FigureSetup("fig3", "G", 50, _cfg(0.002, 262144, 80000, 10000, 5000, False), mu=0.01, lam=2.0),
}


def figure_setup(fig: str, scale: str = "desk", **overrides) -> FigureSetup:
    """The protocol for ``fig`` at ``scale`` (desk or paper), with OptConfig overrides."""
    table = {"desk": _DESK, "paper": _PAPER}.get(scale)
    if table is None:
        raise ValueError(f"unknown scale {scale!r}")
    if fig not in table:
        raise ValueError(f"unknown figure {fig!r}")
    setup = table[fig]
    extra = {k: overrides.pop(k) for k in ("mu", "lam", "d") if k in overrides}
    if overrides:
        setup = replace(setup, cfg=replace(setup.cfg, **overrides))
    return replace(setup, **extra)


@dataclass
class FigureRun:
    seed: int
    weights: Weights
    trajectory: Trajectory
    initial_value: float
    final_value: float
    final_e: float


def _e_metric(B, B_star):
    return surrogate_e(normalize_rows(B @ B_star.T))


def run_figure_seed(setup: FigureSetup, seed: int, logger: Optional[Callable] = None) -> FigureRun:
    """One SGD run of a figure protocol on B* = Id, a* = 1, noiseless ReLU labels."""
    d = setup.d
    gt = make_orthogonal_gt(d, d, ASpec("const", 1.0, 1.0), identity=True)
    act = relu()
    cfg = replace(setup.cfg, seed=seed)
    stream = BatchStream(gt, act, cfg.batch_size, (seed, 0xBA7C))
    rng = make_rng((seed, 0x1417))
    B0 = rng.standard_normal((d, d)) / math.sqrt(d)
    B_star = gt.B_star

    if setup.mode == "relu-l2":
        a_fixed = gt.a_star.copy()

        def source(B, t):
            loss, _, gB = emp_l2_loss_and_grad(a_fixed, B, stream.next(), act)
            return loss, gB

        w, traj = sgd(
            source,
            B0,
            cfg,
            logger=logger,
            metric=lambda B: _e_metric(B, B_star),
            value_fn=lambda B: pop_relu_risk(a_fixed, B, gt, act),
        )
        w.a = a_fixed
    elif setup.mode == "h2h4":
        a0 = np.abs(rng.standard_normal(d)) / math.sqrt(d)

        def source(B, a, t):
            loss, ga, gB = emp_fprime_loss_and_grad(a, B, stream.next())
            return loss, gB, ga

        w, traj = sgd(
            source,
            Weights(B0, a0),
            cfg,
            logger=logger,
            metric=lambda B, a: _e_metric(B, B_star),
            value_fn=lambda B, a: pop_fprime(a, B, gt, act),
        )
    elif setup.mode == "G":
        params = GParams(mu=setup.mu, lam=setup.lam)

        def source(B, t):
            return emp_G_value_and_grad(B, stream.next(), params)

        w, traj = sgd(
            source,
            B0,
            cfg,
            logger=logger,
            metric=lambda B: _e_metric(B, B_star),
            value_fn=lambda B: pop_G(B, gt, params),
        )
    else:
        raise ValueError(f"unknown mode {setup.mode!r}")
    return FigureRun(seed, w, traj, traj.values[0], traj.values[-1], traj.e_metric[-1])


def write_panels(runs, outdir, fig: str) -> dict:
    """``<fig>_loss.csv`` and ``<fig>_error.csv`` with one column per seed (seed-sorted)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    runs = sorted(runs, key=lambda r: r.seed)
    iters = runs[0].trajectory.iters
    paths = {}
    for panel, attr in (("loss", "values"), ("error", "e_metric")):
        path = outdir / f"{fig}_{panel}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter"] + [f"seed{r.seed}" for r in runs])
            for k, it in enumerate(iters):
                w.writerow([it] + [repr(getattr(r.trajectory, attr)[k]) for r in runs])
        paths[panel] = path
    return paths


def repro(fig: str, scale: str, seeds, outdir, logger: Optional[Callable] = None, **overrides):
    """Run every seed of a figure protocol and write its two panel CSVs."""
    setup = figure_setup(fig, scale, **overrides)
    runs = [run_figure_seed(setup, int(s), logger=logger) for s in sorted(seeds)]
    return runs, write_panels(runs, outdir, fig)


# -- population landscape runs on G -------------------------------------------------


def landscape_params(gt: GroundTruth, c: float = 0.01, lam_factor: float = 20.0) -> GParams:
    """mu = c / kappa*, lam = lam_factor * a*_max (the regime where every local minimum of G is global)."""
    return GParams(mu=c / gt.kappa, lam=lam_factor * float(gt.a_star.max()))


def _pop_provider(gt, params):
    def provider(B):
        v, g = pop_G_value_grad(B, gt, params)
        return v, g, pop_G_hess(B, gt, params).reshape(B.size, B.size)

    return provider


def landscape_run(
    seed: int,
    d: int = 6,
    a_spec="loguniform:1,2",
    grad_tol: float = 1e-9,
    early_eps: Optional[float] = None,
    iters: int = 200000,
) -> LandscapeReport:
    """Population gradient descent on G from a random start, then classification.

    With ``early_eps`` the run stops at the first iterate whose gradient
    norm is at most early_eps and whose smallest Hessian eigenvalue is at
    least -tau0.
    """
    gt = make_orthogonal_gt(d, d, a_spec, seed=seed)
    params = landscape_params(gt)
    s4 = params.sigma4_abs
    t0 = tau0(params.mu, gt.a_star, params.lam, d)
    B0 = make_rng((seed, 1)).standard_normal((d, d)) / math.sqrt(d)
    stop = None
    if early_eps is not None:

        def stop(B, value, grad):
            if np.linalg.norm(grad) > early_eps:
                return False
            lam_min, _ = min_hessian_eig(pop_G_hess(B, gt, params).reshape(B.size, B.size))
            return lam_min >= -t0

    w = gd_population(
        lambda B: pop_G_value_grad(B, gt, params),
        B0,
        step=1.0 / (12.0 * params.lam),
        iters=iters,
        grad_tol=grad_tol if early_eps is None else 0.0,
        grow=1.1,
        stop=stop,
    )
    D_th = [theoretical_D(a, params.mu, params.lam, s4) for a in gt.a_star]
    beta_min = s4 * float(gt.a_star.min()) / math.sqrt(6.0)
    extra = {
        "seed": seed,
        "iters": w.info["iters"],
        "tau0": t0,
        "beta_min": beta_min,
        "e": _e_metric(w.B, gt.B_star),
    }
    if early_eps is not None:
        extra["early_eps"] = early_eps
    return classify(w.B, gt, D_th, provider=_pop_provider(gt, params), epsilon=1e-3, tau=t0, extra=extra)


def grad_concentration(d: int = 6, Ns=(10**3, 10**4, 10**5, 10**6), reps: int = 4, seed: int = 0):
    """RMS of |grad G_N - grad G| over ``reps`` batches per N and the log-log slope.

    Returns ``(Ns, errors, slope)``.
    """
    gt = make_orthogonal_gt(d, d, "uniform:1,2", seed=seed)
    params = GParams(mu=0.01, lam=1.0)
    B = make_rng((seed, 2)).standard_normal((d, d)) / math.sqrt(d)
    exact = pop_G_grad(B, gt, params)
    act = relu()
    errs = []
    for k, n in enumerate(Ns):
        sq = 0.0
        for r in range(reps):
            _, g = emp_G_value_and_grad(B, sample_batch(gt, act, int(n), (seed, k, r)), params)
            sq += float(np.sum((g - exact) ** 2))
        errs.append(math.sqrt(sq / reps))
    slope = float(np.polyfit(np.log(np.asarray(Ns, float)), np.log(errs), 1)[0])
    return list(Ns), errs, slope


def error_law_trial(seed: int, eps: float, d: int = 6):
    """Early-stopped run: returns (E_inf, 3 eps / beta_min)."""
    rep = landscape_run(seed, d=d, early_eps=eps)
    return rep.E_inf, 3.0 * eps / rep.extra["beta_min"]


def dpe_summary(B, gt: GroundTruth) -> dict:
    perm, D, E = decompose_dpe(B, gt.B_star)
    return {"perm": perm, "D": D, "E_inf": float(np.max(np.abs(E)))}


# -- recovery trials ------------------------------------------------------------------


def _rotate_toward(v, rng, dist):
    """Unit vector at Euclidean distance ``dist`` from unit ``v`` in a random direction."""
    w = rng.standard_normal(v.size)
    w -= (w @ v) * v
    w /= np.linalg.norm(w)
    theta = 2.0 * math.asin(dist / 2.0)
    return math.cos(theta) * v + math.sin(theta) * w


def recovery_trial_orthogonal(seed: int, delta: float, d: int = 6, n: int = 10**6, a_spec="uniform:1,2"):
    """Orthogonal a-estimator on rows exactly delta away from a signed permutation of B*.

    Returns ``(err_inf, bound, se_max, result)`` with ``bound = delta a*_max``.
    """
    from .recovery import recover_a_orthogonal

    gt = make_orthogonal_gt(d, d, a_spec, seed=(seed, 0x0A))
    rng = make_rng((seed, 0x0B))
    perm = rng.permutation(d)
    signs = rng.choice([-1.0, 1.0], size=d)
    B = np.vstack([_rotate_toward(signs[i] * gt.B_star[perm[i]], rng, delta) for i in range(d)])
    res = recover_a_orthogonal(B, sample_batch(gt, relu(), n, (seed, 0x0C)))
    err = float(np.max(np.abs(res.a - gt.a_star[perm])))
    return err, delta * float(gt.a_star.max()), float(np.max(res.a_se)), res


def recovery_trial_general(seed: int, delta: float, d: int = 4, cond: float = 1.5, n: int = 10**6, a_spec="uniform:1,2"):
    """General a-estimator on unit rows near a signed permutation of a non-orthogonal unit-row B*.

    The realised spectral distance replaces ``delta`` in the bound
    ``2 sqrt2 a*_max sqrt(m) delta / sigma_min(B)^2``.  Returns
    ``(err_2, bound, se_norm, result)``.
    """
    from .data import make_general_gt
    from .recovery import recover_a_general

    gt = make_general_gt(d, d, cond, a_spec, seed=(seed, 0x1A)).normalized(relu())
    rng = make_rng((seed, 0x1B))
    perm = rng.permutation(d)
    signs = rng.choice([-1.0, 1.0], size=d)
    target = signs[:, None] * gt.B_star[perm]
    B = np.vstack([_rotate_toward(target[i], rng, delta) for i in range(d)])
    dist = float(np.linalg.norm(B - target, 2))
    res = recover_a_general(B, sample_batch(gt, relu(), n, (seed, 0x1C)))
    err = float(np.linalg.norm(res.a - gt.a_star[perm]))
    smin = float(np.linalg.svd(B, compute_uv=False)[-1])
    bound = 2.0 * math.sqrt(2.0) * float(gt.a_star.max()) * math.sqrt(d) * dist / smin**2
    return err, bound, float(np.linalg.norm(res.a_se)), res
