"""Triangle factor graph model for binary status inference."""

from .inference import (
    LBPConfig,
    Marginals,
    exact_log_partition,
    exact_marginals,
    lbp_marginals,
    marginals,
)
from .io import SavedModel, load_model, save_model
from .learning import Prediction, TrainConfig, TrainTrace, gradient, log_likelihood, predict, train
from .model import FactorGraph, Theta, build_factor_graph

__all__ = [
    "FactorGraph",
    "LBPConfig",
    "Marginals",
    "Prediction",
    "SavedModel",
    "Theta",
    "TrainConfig",
    "TrainTrace",
    "build_factor_graph",
    "exact_log_partition",
    "exact_marginals",
    "gradient",
    "lbp_marginals",
    "load_model",
    "log_likelihood",
    "marginals",
    "predict",
    "save_model",
    "train",
]
