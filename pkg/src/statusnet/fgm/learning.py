"""Objective, gradient, gradient-ascent training and marginal decoding."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import NumericalError, ShapeError
from ..graph import MANAGER, SUBORDINATE, StatusLabels
from .inference import (
    EXACT_MAX_NODES,
    LBPConfig,
    Marginals,
    exact_log_partition,
    lbp_marginals,
    marginals,
    use_exact,
)
from .model import FactorGraph, Theta, configuration_counts, feature_counts

TIE_EPS = 1e-12
# LBP budget multiplier for a cold restart after a non-converged pass
RETRY_FACTOR = 10


@dataclass(frozen=True)
class TrainConfig:
    eta: float = 0.05
    max_epochs: int = 500
    grad_tol: float = 1e-4
    l2_lambda: float = 0.01
    # relative objective drop tolerated before the step is halved
    slack: float = 1e-6
    min_eta: float = 1e-8
    inference: str = "auto"
    lbp: LBPConfig = field(default_factory=LBPConfig)

    def validate(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        self.lbp.validate()

    def as_dict(self):
        return asdict(self)


@dataclass
class TrainTrace:
    objective: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    eta: list[float] = field(default_factory=list)
    converged_lbp: list[bool] = field(default_factory=list)
    stopped: str = ""
    exact: bool = False

    @property
    def epochs(self) -> int:
        return len(self.objective)

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Prediction:
    labels: StatusLabels
    confidence: np.ndarray  # probability of the assigned label
    p_manager: np.ndarray
    converged: bool


def _check_labels(fg, labels):
    if len(labels) != fg.n:
        raise ShapeError(f"labels cover {len(labels)} nodes, graph has {fg.n}")


def log_likelihood(fg: FactorGraph, theta: Theta, labels: StatusLabels, inference: str = "auto") -> float:
    """Regularized log-probability of a labeling.

    With partial labels this is the marginal log-likelihood of the observed
    nodes, ``log Z(clamped) - log Z``. Exact enumeration is used when the
    graph has at most 20 nodes (``inference="auto"``), otherwise both
    partition functions are Bethe estimates.
    """
    theta.check(fg)
    _check_labels(fg, labels)
    exact = inference == "exact" or (inference == "auto" and fg.n <= EXACT_MAX_NODES)
    if inference not in ("auto", "exact", "lbp"):
        raise ValueError(f"unknown inference mode {inference!r}")
    if exact:
        log_z = exact_log_partition(fg, theta)
        if labels.fully_observed:
            score = float(configuration_counts(fg, labels) @ theta.vector())
        else:
            score = exact_log_partition(fg, theta, labels)
    else:
        log_z = lbp_marginals(fg, theta).log_partition
        score = lbp_marginals(fg, theta, labels).log_partition
    return score - log_z - theta.penalty()


@dataclass
class _Pass:
    value: float
    grad: np.ndarray
    clamped: Marginals
    free: Marginals


def _settled(fg, theta, clamped, mode, lbp, warm):
    """Marginals, retrying from a cold start with a larger budget if LBP stalls."""
    m = marginals(fg, theta, clamped, mode, lbp, warm)
    if m.exact or m.converged:
        return m
    retry = LBPConfig(lbp.max_iters * RETRY_FACTOR, lbp.damping, lbp.tol)
    return marginals(fg, theta, clamped, mode, retry, None)


def _objective_and_gradient(fg, theta, labels, inference, lbp, warm=None) -> _Pass:
    warm_c, warm_f = warm if warm is not None else (None, None)
    exact = use_exact(fg, None, inference)
    mode = "exact" if exact else ("lbp" if inference == "auto" else inference)
    m_c = _settled(fg, theta, labels, mode, lbp, warm_c)
    m_f = _settled(fg, theta, None, mode, lbp, warm_f)
    e_c = feature_counts(fg, m_c.p_manager, m_c.triangle_beliefs)
    e_f = feature_counts(fg, m_f.p_manager, m_f.triangle_beliefs)
    vec = theta.vector()
    grad = e_c - e_f - theta.l2_lambda * vec
    value = m_c.log_partition - m_f.log_partition - theta.penalty()
    return _Pass(value, grad, m_c, m_f)


def gradient(
    fg: FactorGraph,
    theta: Theta,
    train_labels: StatusLabels,
    inference: str = "auto",
    lbp: LBPConfig = LBPConfig(),
) -> np.ndarray:
    """Gradient of ``log_likelihood`` with respect to ``theta.vector()``.

    Expected feature counts with the training labels clamped minus the
    unconstrained model expectation, minus ``lambda * theta``. When every
    node is labeled the clamped expectation is the empirical count.
    """
    theta.check(fg)
    _check_labels(fg, train_labels)
    if not train_labels.labeled.any():
        raise ValueError("gradient needs at least one labeled node")
    return _objective_and_gradient(fg, theta, train_labels, inference, lbp).grad


def step_scale(fg: FactorGraph) -> np.ndarray:
    """Per-parameter gradient scaling: node weights by 1/n, triangle weights by 1/C."""
    return np.concatenate([
        np.full(fg.n_features, 1.0 / max(fg.n, 1)),
        np.full(4, 1.0 / max(fg.n_triangles, 1)),
    ])


def _warm(p: _Pass):
    """Reuse messages only when they come from a converged run."""
    return (
        p.clamped.messages if p.clamped.converged else None,
        p.free.messages if p.free.converged else None,
    )


def train(
    fg: FactorGraph,
    train_labels: StatusLabels,
    cfg: TrainConfig = TrainConfig(),
    theta0: Theta | None = None,
) -> tuple[Theta, TrainTrace]:
    """Gradient ascent on the regularized (marginal) log-likelihood.

    The gradient is averaged over nodes before the step so ``eta`` does not
    have to shrink with graph size. When an update lowers the objective by
    more than ``slack`` (relative), the step is halved and retried, which
    keeps the recorded trace non-decreasing; after an accepted step the
    step size doubles again, capped at ``cfg.eta``.
    """
    cfg.validate()
    _check_labels(fg, train_labels)
    if not train_labels.labeled.any():
        raise ValueError("training needs at least one labeled node")
    theta = theta0 or Theta.zeros(fg.n_features, cfg.l2_lambda)
    theta = Theta(theta.node_weights.copy(), theta.triangle_weights.copy(), cfg.l2_lambda)
    trace = TrainTrace(exact=use_exact(fg, None, cfg.inference))
    scale = step_scale(fg)
    eta = cfg.eta

    cur = _objective_and_gradient(fg, theta, train_labels, cfg.inference, cfg.lbp)
    if not math.isfinite(cur.value):
        raise NumericalError("objective is not finite at epoch 0")
    for epoch in range(cfg.max_epochs):
        gnorm = float(np.max(np.abs(cur.grad))) if len(cur.grad) else 0.0
        trace.objective.append(cur.value)
        trace.grad_norm.append(gnorm)
        trace.eta.append(eta)
        trace.converged_lbp.append(cur.clamped.converged and cur.free.converged)
        if gnorm < cfg.grad_tol:
            trace.stopped = "grad_tol"
            return theta, trace
        while True:
            cand = Theta.from_vector(theta.vector() + eta * scale * cur.grad, fg.n_features, cfg.l2_lambda)
            try:
                nxt = _objective_and_gradient(fg, cand, train_labels, cfg.inference, cfg.lbp, _warm(cur))
                ok = math.isfinite(nxt.value)
            except NumericalError:
                ok = False
            if ok and nxt.value >= cur.value - cfg.slack * max(1.0, abs(cur.value)):
                break
            eta *= 0.5
            if eta < cfg.min_eta:
                if not ok:
                    raise NumericalError(f"objective is not finite at epoch {epoch + 1}")
                trace.stopped = "step_underflow"
                return theta, trace
        theta, cur = cand, nxt
        eta = min(cfg.eta, 2.0 * eta)
    trace.objective.append(cur.value)
    trace.grad_norm.append(float(np.max(np.abs(cur.grad))) if len(cur.grad) else 0.0)
    trace.eta.append(eta)
    trace.converged_lbp.append(cur.clamped.converged and cur.free.converged)
    trace.stopped = "grad_tol" if trace.grad_norm[-1] < cfg.grad_tol else "max_epochs"
    return theta, trace


def predict(
    fg: FactorGraph,
    theta: Theta,
    train_labels: StatusLabels,
    inference: str = "auto",
    lbp: LBPConfig = LBPConfig(),
) -> Prediction:
    """Label every node by the argmax of its marginal with training labels clamped.

    Clamped nodes keep their label with confidence 1. Ties go to Subordinate.
    """
    theta.check(fg)
    _check_labels(fg, train_labels)
    m = marginals(fg, theta, train_labels, inference, lbp)
    p_m = m.p_manager.copy()
    known = train_labels.labeled
    p_m[known] = (train_labels.values[known] == MANAGER).astype(np.float64)
    pick_m = (p_m - 0.5) >= TIE_EPS
    out = np.where(pick_m, MANAGER, SUBORDINATE).astype(np.int8)
    out[known] = train_labels.values[known]
    conf = np.where(out == MANAGER, p_m, 1.0 - p_m)
    return Prediction(StatusLabels(out), conf, p_m, m.converged)
