"""Command-line harness: gen, train, landscape, verify, recover, e2e and repro.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments
from .data import BatchStream, GroundTruth, make_general_gt, make_orthogonal_gt, make_rng, parse_a_spec, sample_batch
from .errors import DivergenceDetected, LandscapeError
from .hermite import relu
from .io import FormatError, read_config, read_gt, read_weights, write_gt, write_weights
from .landscape import classify, surrogate_e, tau0, theoretical_D
from .objectives import (
    GParams,
    emp_F_value_and_grad,
    emp_fprime_loss_and_grad,
    emp_G_value_and_grad,
    emp_l2_loss_and_grad,
    p_prime,
    pop_F_undercomplete,
    pop_F_undercomplete_grad,
    pop_fprime,
    pop_G,
    pop_G_hess,
    pop_G_value_grad,
    pop_relu_risk,
)
from .optimize import OptConfig, Trajectory, Weights, gd_population, normalize_rows, sgd
from .recovery import MODES, E2EConfig, end_to_end, readout_nonorthogonal, recover_a_general, recover_a_orthogonal
from .verify import SUITES, run_suite

log = logging.getLogger("nnlandscape")

TRAIN_MODES = ("relu-l2", "h2h4", "G", "F", "F-under")

TRAJECTORY_HELP = """\
CSV schemas (comma separated, LF line endings, '.' decimal):
  trajectory.csv     iter,value,e_metric,grad_norm   one row per logged iteration
  <fig>_loss.csv     iter,seed0,seed1,...            population value per seed
  <fig>_error.csv    iter,seed0,seed1,...            e(Q) per seed
  <fig>_summary.csv  seed,initial,final,final_e
  summary.csv        seed,initial,final,final_e      (train, one row per seed)
"""


class UsageError(Exception):
    """Bad command-line or config input (exit code 2)."""


# -- experiment config ------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Everything ``train`` needs; parsed from key=value text plus overrides.

    ``solver`` is ``sgd`` (fresh batches every step) or ``gd`` (population
    gradient descent with backtracking, available for G, F and F-under).
    """

    mode: str = "G"
    d: int = 6
    m: Optional[int] = None
    a_spec: str = "const:1"
    identity: bool = False
    cond: float = 1.0
    gt: Optional[str] = None
    gt_seed: int = 0
    seeds: tuple = (0,)
    solver: str = "sgd"
    mu: Optional[float] = None
    lam: Optional[float] = None
    delta: float = 0.01
    train_a: bool = False
    out: str = "run"
    step0: Optional[float] = None
    decay_factor: float = 4.0
    decay_every: int = 5000
    plateau_start: int = 10000
    iters: int = 20000
    batch_size: int = 16384
    project_rows: bool = False
    noise_std: float = 0.0
    log_every: int = 100
    grad_tol: float = 1e-9

    def opt_config(self, seed: int, lam: Optional[float] = None) -> OptConfig:
        """OptConfig for one seed; an unset step0 takes the mode default.

        Defaults: 1 / (12 lam) for G (the regularizer dominates the curvature,
        lam being the G weight actually used), 0.1 for every other mode.
        """
        step0 = self.step0
        if step0 is None:
            step0 = 1.0 / (12.0 * lam) if self.mode == "G" and lam else 0.1
        return OptConfig(
            step0=step0,
            decay_factor=self.decay_factor,
            decay_every=self.decay_every,
            plateau_start=self.plateau_start,
            iters=self.iters,
            batch_size=self.batch_size,
            project_rows=self.project_rows,
            noise_std=self.noise_std,
            seed=seed,
            log_every=self.log_every,
        )


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _parse_seeds(text: str) -> tuple:
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError("empty seed list")
    return tuple(sorted(set(out)))


def _optional(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none", "auto") else conv(text)

    return parse


_CONVERTERS = {
    "mode": str,
    "d": int,
    "m": _optional(int),
    "a_spec": str,
    "identity": _parse_bool,
    "cond": float,
    "gt": _optional(str),
    "gt_seed": int,
    "seeds": _parse_seeds,
    "solver": str,
    "mu": _optional(float),
    "lam": _optional(float),
    "delta": float,
    "train_a": _parse_bool,
    "out": str,
    "step0": _optional(float),
    "decay_factor": float,
    "decay_every": int,
    "plateau_start": int,
    "iters": int,
    "batch_size": int,
    "project_rows": _parse_bool,
    "noise_std": float,
    "log_every": int,
    "grad_tol": float,
}


def build_config(raw: dict) -> ExperimentConfig:
    """Convert and validate raw string values; raises UsageError on any problem."""
    values = {}
    for key, text in raw.items():
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise UsageError(f"unknown config key {key!r}")
        try:
            values[key] = _CONVERTERS[key](text)
        except (ValueError, UsageError) as exc:
            raise UsageError(f"{key}: {exc}") from None
    cfg = ExperimentConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.mode not in TRAIN_MODES:
        raise UsageError(f"mode must be one of {TRAIN_MODES}, got {cfg.mode!r}")
    if cfg.solver not in ("sgd", "gd"):
        raise UsageError("solver must be sgd or gd")
    if cfg.solver == "gd" and cfg.mode in ("relu-l2", "h2h4"):
        raise UsageError(f"solver=gd is not available for mode {cfg.mode}")
    if cfg.d < 1:
        raise UsageError("d must be >= 1")
    m = cfg.d if cfg.m is None else cfg.m
    if not 1 <= m <= cfg.d:
        raise UsageError(f"need 1 <= m <= d, got m={m}")
    if cfg.mode == "F" and m != cfg.d:
        raise UsageError("mode F needs m == d; use F-under")
    if cfg.mode == "F-under" and m >= cfg.d:
        raise UsageError("mode F-under needs m < d")
    if cfg.mode in ("relu-l2", "h2h4", "G") and cfg.cond != 1.0:
        raise UsageError(f"mode {cfg.mode} needs orthonormal ground truth (cond = 1)")
    if cfg.cond < 1:
        raise UsageError("cond must be >= 1")
    if cfg.mu is not None and cfg.mu < 0:
        raise UsageError("mu must be >= 0")
    if cfg.lam is not None and cfg.lam <= 0:
        raise UsageError("lam must be > 0")
    if cfg.delta < 0:
        raise UsageError("delta must be >= 0")
    if cfg.batch_size < 2:
        raise UsageError("batch_size must be >= 2")
    try:
        parse_a_spec(cfg.a_spec)
        cfg.opt_config(0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- train --------------------------------------------------------------------------


def _ground_truth(cfg: ExperimentConfig) -> GroundTruth:
    if cfg.gt is not None:
        return read_gt(cfg.gt)
    m = cfg.d if cfg.m is None else cfg.m
    if cfg.cond != 1.0 or cfg.mode in ("F", "F-under") and not cfg.identity:
        return make_general_gt(cfg.d, m, cfg.cond, cfg.a_spec, cfg.noise_std, seed=cfg.gt_seed)
    return make_orthogonal_gt(cfg.d, m, cfg.a_spec, cfg.noise_std, seed=cfg.gt_seed, identity=cfg.identity)


@dataclass
class TrainResult:
    seed: int
    weights: Weights
    trajectory: Trajectory


def _row_e(B, target):
    return surrogate_e(normalize_rows(B) @ normalize_rows(target).T)


def train_seed(cfg: ExperimentConfig, gt: GroundTruth, seed: int, logger=None) -> TrainResult:
    """One run of ``cfg.mode`` from a seeded random start."""
    act = relu()
    opt = cfg.opt_config(seed)
    m, d = gt.m, gt.d
    stream = BatchStream(gt, act, cfg.batch_size, (seed, 0xBA7C))
    B0 = make_rng((seed, 0x1417)).standard_normal((m, d)) / math.sqrt(d)
    mode = cfg.mode

    if mode == "relu-l2":
        if cfg.train_a:
            a0 = np.abs(make_rng((seed, 0xA0)).standard_normal(m)) / math.sqrt(d)

            def source(B, a, t):
                loss, ga, gB = emp_l2_loss_and_grad(a, B, stream.next(), act)
                return loss, gB, ga

            w, traj = sgd(
                source,
                Weights(B0, a0),
                opt,
                logger=logger,
                metric=lambda B, a: _row_e(B @ gt.B_star.T, np.eye(m)),
                value_fn=lambda B, a: pop_relu_risk(a, B, gt, act),
            )
        else:
            a_fixed = gt.a_star.copy()

            def source(B, t):
                loss, _, gB = emp_l2_loss_and_grad(a_fixed, B, stream.next(), act)
                return loss, gB

            w, traj = sgd(
                source,
                B0,
                opt,
                logger=logger,
                metric=lambda B: _row_e(B @ gt.B_star.T, np.eye(m)),
                value_fn=lambda B: pop_relu_risk(a_fixed, B, gt, act),
            )
            w.a = a_fixed
        return TrainResult(seed, w, traj)

    if mode == "h2h4":
        gtn = gt.normalized(act)
        a0 = np.abs(make_rng((seed, 0xA0)).standard_normal(m)) / math.sqrt(d)

        def source(B, a, t):
            loss, ga, gB = emp_fprime_loss_and_grad(a, B, stream.next())
            return loss, gB, ga

        def value(B, a):
            return pop_fprime(a, normalize_rows(B), gtn, act)

        w, traj = sgd(
            source,
            Weights(B0, a0),
            opt,
            logger=logger,
            metric=lambda B, a: _row_e(B @ gtn.B_star.T, np.eye(m)),
            value_fn=value,
        )
        return TrainResult(seed, w, traj)

    if mode == "G":
        if not gt.is_orthonormal():
            raise UsageError("mode G needs orthonormal ground-truth rows")
        params = GParams(
            mu=0.01 / gt.kappa if cfg.mu is None else cfg.mu,
            lam=20.0 * float(gt.a_star.max()) if cfg.lam is None else cfg.lam,
        )
        opt = cfg.opt_config(seed, params.lam)

        def metric(B):
            return _row_e(B @ gt.B_star.T, np.eye(m))

        if cfg.solver == "gd":
            return _gd_result(seed, lambda B: pop_G_value_grad(B, gt, params), B0, opt, cfg, metric)

        def source(B, t):
            return emp_G_value_and_grad(B, stream.next(), params)

        w, traj = sgd(source, B0, opt, logger=logger, metric=metric, value_fn=lambda B: pop_G(B, gt, params))
        return TrainResult(seed, w, traj)

    # F and F-under work on the unit-row equivalent ground truth; labels are unchanged
    gtn = gt.normalized(act)
    params = GParams(mu=0.01 / gtn.kappa if cfg.mu is None else cfg.mu, lam=1.0 if cfg.lam is None else cfg.lam)
    delta = cfg.delta if mode == "F-under" else 0.0
    target = np.sqrt(gtn.a_star)[:, None] * gtn.B_star

    def metric(B):
        return _row_e(readout_nonorthogonal(B), target)

    def pop(B):
        return pop_F_undercomplete(B, gtn, params, delta), pop_F_undercomplete_grad(B, gtn, params, delta)

    if cfg.solver == "gd":
        return _gd_result(seed, pop, B0, opt, cfg, metric)

    def source(B, t):
        return emp_F_value_and_grad(B, stream.next(), params, delta)

    w, traj = sgd(source, B0, opt, logger=logger, metric=metric, value_fn=lambda B: pop(B)[0])
    return TrainResult(seed, w, traj)


def _gd_result(seed, value_and_grad, B0, opt: OptConfig, cfg: ExperimentConfig, metric) -> TrainResult:
    w = gd_population(value_and_grad, B0, opt.step0, opt.iters, cfg.grad_tol, grow=1.1)
    traj = Trajectory()
    hist = w.info["history"]
    for t in range(0, len(hist), opt.log_every):
        traj.append(t, hist[t], math.nan, math.nan)
    last = len(hist) - 1
    if not traj.iters or traj.iters[-1] != last:
        traj.append(last, hist[last], math.nan, math.nan)
    traj.e_metric[-1] = metric(w.B)
    traj.grad_norms[-1] = w.info["grad_norm"]
    return TrainResult(seed, w, traj)


def _write_summary(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["seed", "initial", "final", "final_e"])
        for r in rows:
            wr.writerow([r[0], repr(float(r[1])), repr(float(r[2])), repr(float(r[3]))])


def _progress(prefix):
    def logger(rec):
        t, value, e, gn = rec
        log.info("%s iter=%d value=%.6g e=%.4g grad=%.3g", prefix, t, value, e, gn)

    return logger


def cmd_train(args) -> int:
    try:
        raw = read_config(args.config) if args.config else {}
    except FormatError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    raw.update(_pairs(args.overrides))
    cfg = build_config(raw)
    gt = _ground_truth(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_gt(out / "gt.txt", gt)
    rows = []
    for seed in cfg.seeds:
        res = train_seed(cfg, gt, seed, logger=_progress(f"seed={seed}"))
        target = out if len(cfg.seeds) == 1 else out / f"seed{seed}"
        target.mkdir(parents=True, exist_ok=True)
        res.trajectory.to_csv(target / "trajectory.csv")
        write_weights(target / "weights.txt", res.weights)
        tr = res.trajectory
        rows.append((seed, tr.values[0], tr.values[-1], tr.e_metric[-1]))
        print(f"seed={seed} initial={tr.values[0]:.6g} final={tr.values[-1]:.6g} e={tr.e_metric[-1]:.4g}")
    _write_summary(out / "summary.csv", rows)
    return 0


def _pairs(tokens) -> dict:
    """``--key value`` (or ``--key=value``) tokens left over by argparse."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) <= 2:
            raise UsageError(f"unexpected argument {tok!r}; overrides are --key value")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise UsageError(f"override {tok} needs a value")
            value = tokens[i + 1]
            i += 2
        out[key.replace("-", "_")] = value
    return out


# -- gen ----------------------------------------------------------------------------


def cmd_gen(args) -> int:
    out = Path(args.output)
    if out.exists() and not args.force:
        raise UsageError(f"{out} exists; pass --force to overwrite")
    m = args.d if args.m is None else args.m
    if args.cond is not None and (args.orthogonal or args.identity):
        raise UsageError("--cond cannot be combined with --orthogonal/--identity")
    if args.cond is not None:
        gt = make_general_gt(args.d, m, args.cond, args.a, args.noise, seed=args.seed)
    else:
        gt = make_orthogonal_gt(args.d, m, args.a, args.noise, seed=args.seed, identity=args.identity)
    write_gt(out, gt)
    print(f"wrote {out} d={gt.d} m={gt.m} kappa={gt.kappa:.4g}")
    return 0


# -- landscape ----------------------------------------------------------------------

# for mu = 0 the curvature threshold collapses to zero; roundoff needs a floor
TAU_FLOOR = 1e-8
PPRIME_PROBES = 1000
PPRIME_RADIUS = 0.01
PPRIME_GLOBAL_TOL = 1e-9


def cmd_landscape(args) -> int:
    gt = read_gt(args.gt)
    w = read_weights(args.weights)
    if w.B.shape[1] != gt.d:
        raise FormatError(f"weights have dimension {w.B.shape[1]}, ground truth {gt.d}")
    if args.objective == "pprime":
        text = _pprime_report(w.B, gt, args.seed)
    else:
        mu = 0.01 / gt.kappa if args.mu is None else args.mu
        lam = 20.0 * float(gt.a_star.max()) if args.lam is None else args.lam
        params = GParams(mu=mu, lam=lam)
        D_th = [theoretical_D(a, mu, lam, params.sigma4_abs) for a in gt.a_star]
        tau = args.tau if args.tau is not None else max(tau0(mu, gt.a_star, lam, gt.d), TAU_FLOOR)

        def provider(B):
            v, g = pop_G_value_grad(B, gt, params)
            return v, g, pop_G_hess(B, gt, params).reshape(B.size, B.size)

        rep = classify(w.B, gt, D_th, provider=provider, epsilon=args.epsilon, tau=tau, extra={"mu": mu, "lam": lam})
        text = rep.to_text()
    sys.stdout.write(text)
    if args.output:
        Path(args.output).write_text(text)
    return 0


def _pprime_report(B, gt: GroundTruth, seed: int) -> str:
    """P' value plus a random probe of nearby row-normalized points."""
    B = normalize_rows(B)
    value = p_prime(B, gt)
    rng = make_rng((seed, 0x9E))
    low = math.inf
    for _ in range(PPRIME_PROBES):
        step = rng.standard_normal(B.shape)
        step *= rng.uniform(0.0, PPRIME_RADIUS) / np.linalg.norm(step)
        low = min(low, p_prime(normalize_rows(B + step), gt))
    if value <= PPRIME_GLOBAL_TOL:
        verdict = "global-min-class"
    elif low >= value - PPRIME_GLOBAL_TOL:
        verdict = "non-global-local-min"
    else:
        verdict = "not-stationary"
    return f"pprime={value!r}\nprobe_min={low!r}\nprobes={PPRIME_PROBES}\nradius={PPRIME_RADIUS!r}\nverdict={verdict}\n"


# -- verify -------------------------------------------------------------------------


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    failed = 0
    for name in names:
        for check in run_suite(name):
            print(check.line(), flush=True)
            failed += check.passed is False
    print(f"summary failed={failed}")
    return 1 if failed else 0


# -- recover / e2e ------------------------------------------------------------------


def cmd_recover(args) -> int:
    gt = read_gt(args.gt)
    w = read_weights(args.weights)
    batch = sample_batch(gt, relu(), args.n, (args.seed, 0xA1))
    if args.method == "orthogonal":
        res = recover_a_orthogonal(normalize_rows(w.B), batch, gt)
    else:
        res = recover_a_general(w.B, batch, gt)
    sys.stdout.write(res.to_text())
    if args.output:
        Path(args.output).write_text(res.a_csv())
    return 0


def cmd_e2e(args) -> int:
    gt = read_gt(args.gt)
    cfg = E2EConfig(delta=args.delta, recovery_n=args.n, seed=args.seed, iters=args.iters)
    res, rep = end_to_end(gt, args.mode, cfg)
    sys.stdout.write(res.to_text())
    sys.stdout.write(rep.to_text())
    return 0


# -- repro --------------------------------------------------------------------------


def cmd_repro(args) -> int:
    figs = experiments.FIGURES if args.figure == "all" else (args.figure,)
    seeds = _parse_seeds(args.seeds)
    overrides = {}
    if args.iters is not None:
        overrides["iters"] = args.iters
    out = Path(args.out)
    for fig in figs:
        runs, paths = experiments.repro(fig, args.scale, seeds, out, logger=_progress(fig), **overrides)
        _write_summary(out / f"{fig}_summary.csv", [(r.seed, r.initial_value, r.final_value, r.final_e) for r in runs])
        for r in runs:
            print(f"{fig} seed={r.seed} initial={r.initial_value:.6g} final={r.final_value:.6g} e={r.final_e:.4g}")
        print(f"{fig} wrote {paths['loss']} {paths['error']}")
    return 0


# -- entry point --------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="nnlandscape",
        description="Landscape-designed objectives for one-hidden-layer networks.",
        epilog=TRAJECTORY_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a ground-truth file")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--m", type=int, default=None, help="hidden units (default d)")
    kind = g.add_mutually_exclusive_group()
    kind.add_argument("--orthogonal", action="store_true", help="Haar-orthonormal rows (default)")
    kind.add_argument("--identity", action="store_true", help="rows of the identity")
    g.add_argument("--cond", type=float, default=None, help="general rows with this condition number")
    g.add_argument("--a", default="const:1", help="const:c, uniform:lo,hi or loguniform:lo,hi")
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--force", action="store_true", help="overwrite an existing file")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser(
        "train",
        help="run one experiment config",
        description="Config keys: " + ", ".join(_CONVERTERS) + ". Extra --key value pairs override the file.",
        epilog=TRAJECTORY_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    t.add_argument("--config", default=None, help="key=value file")
    t.set_defaults(func=cmd_train)

    la = sub.add_parser("landscape", help="classify weights against a ground truth")
    la.add_argument("--weights", required=True)
    la.add_argument("--gt", required=True)
    la.add_argument("--objective", choices=("G", "pprime"), default="G")
    la.add_argument("--mu", type=float, default=None, help="default 0.01 / kappa*")
    la.add_argument("--lam", type=float, default=None, help="default 20 a*_max")
    la.add_argument("--epsilon", type=float, default=1e-3, help="gradient-norm threshold")
    la.add_argument("--tau", type=float, default=None, help="curvature threshold (default tau0)")
    la.add_argument("--seed", type=int, default=0, help="seed for the P' probe")
    la.add_argument("-o", "--output", default=None)
    la.set_defaults(func=cmd_landscape)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("suite", choices=tuple(SUITES) + ("all",))
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("recover", help="estimate the output layer for given rows")
    r.add_argument("--weights", required=True)
    r.add_argument("--gt", required=True, help="labels are drawn from this model")
    r.add_argument("--method", choices=("orthogonal", "general"), default="orthogonal")
    r.add_argument("--n", type=int, default=10**6)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("-o", "--output", default=None, help="CSV of recovered a")
    r.set_defaults(func=cmd_recover)

    e = sub.add_parser("e2e", help="optimize, classify and recover in one go")
    e.add_argument("--gt", required=True)
    e.add_argument("--mode", choices=MODES, required=True)
    e.add_argument("--delta", type=float, default=0.01)
    e.add_argument("--n", type=int, default=E2EConfig.recovery_n, help="recovery samples (orthogonal-G)")
    e.add_argument("--iters", type=int, default=200000)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_e2e)

    rp = sub.add_parser("repro", help="reproduce figure runs as CSVs", epilog=TRAJECTORY_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    rp.add_argument("figure", choices=experiments.FIGURES + ("all",))
    rp.add_argument("--scale", choices=("desk", "paper"), default="desk")
    rp.add_argument("--seeds", default="0-4", help="e.g. 0-4 or 0,2,5")
    rp.add_argument("--iters", type=int, default=None, help="truncate the schedule (smoke runs)")
    rp.add_argument("--out", default="repro")
    rp.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    if rest and args.command != "train":
        parser.error(f"unrecognized arguments: {' '.join(rest)}")
    args.overrides = rest
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceDetected as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError, LandscapeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
