"""Landscape-designed objectives for learning one-hidden-layer networks with Gaussian inputs."""

from .data import GroundTruth, make_general_gt, make_orthogonal_gt, sample_batch
from .hermite import hermite_h, hermite_mix, relu, relu_coeff
from .landscape import classify, decompose_dpe, surrogate_e
from .objectives import GParams, pop_G, pop_F
from .optimize import OptConfig, Weights, gd_population, sgd
from .recovery import end_to_end, recover_a_general, recover_a_orthogonal

__version__ = "0.1.0"

__all__ = [
    "GParams",
    "GroundTruth",
    "OptConfig",
    "Weights",
    "classify",
    "decompose_dpe",
    "end_to_end",
    "gd_population",
    "hermite_h",
    "hermite_mix",
    "make_general_gt",
    "make_orthogonal_gt",
    "pop_F",
    "pop_G",
    "recover_a_general",
    "recover_a_orthogonal",
    "relu",
    "relu_coeff",
    "sample_batch",
    "sgd",
]
