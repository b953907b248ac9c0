"""Independent-instance baselines: Gaussian naive Bayes and logistic regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .errors import DegenerateTraining, NumericalError, ShapeError
from .graph import MANAGER, SUBORDINATE, StatusLabels

VAR_FLOOR = 1e-9


def _labeled_rows(x, labels):
    x = np.asarray(getattr(x, "x", x), dtype=np.float64)
    y = labels.values if isinstance(labels, StatusLabels) else np.asarray(labels, dtype=np.int8)
    if x.ndim != 2 or len(x) != len(y):
        raise ShapeError("feature rows do not match labels")
    keep = y >= 0
    x, y = x[keep], y[keep]
    if not ((y == MANAGER).any() and (y == SUBORDINATE).any()):
        raise DegenerateTraining("training rows must contain both classes")
    return x, y


@dataclass(frozen=True)
class NaiveBayes:
    log_prior: np.ndarray  # (2,), index = class
    mean: np.ndarray  # (2, d)
    var: np.ndarray  # (2, d)

    def log_joint(self, x) -> np.ndarray:
        x = np.asarray(getattr(x, "x", x), dtype=np.float64)
        if x.shape[1] != self.mean.shape[1]:
            raise ShapeError("feature count does not match the classifier")
        out = np.empty((len(x), 2))
        for c in range(2):
            ll = -0.5 * (np.log(2 * np.pi * self.var[c]) + (x - self.mean[c]) ** 2 / self.var[c])
            out[:, c] = self.log_prior[c] + ll.sum(axis=1)
        return out

    def predict_proba(self, x) -> np.ndarray:
        """P(Manager) per row."""
        lj = self.log_joint(x)
        return expit(lj[:, MANAGER] - lj[:, SUBORDINATE])

    def predict(self, x) -> StatusLabels:
        lj = self.log_joint(x)
        # ties go to the prior argmax
        pick_m = lj[:, MANAGER] > lj[:, SUBORDINATE]
        tie = lj[:, MANAGER] == lj[:, SUBORDINATE]
        pick_m |= tie & (self.log_prior[MANAGER] > self.log_prior[SUBORDINATE])
        return StatusLabels(np.where(pick_m, MANAGER, SUBORDINATE))


def naive_bayes_train(x, labels) -> NaiveBayes:
    """Per-class independent Gaussians on raw attributes; unlabeled rows are skipped."""
    x, y = _labeled_rows(x, labels)
    counts = np.array([(y == c).sum() for c in (MANAGER, SUBORDINATE)], dtype=np.float64)
    mean = np.stack([x[y == c].mean(axis=0) for c in (MANAGER, SUBORDINATE)])
    var = np.stack([x[y == c].var(axis=0) for c in (MANAGER, SUBORDINATE)])
    return NaiveBayes(np.log(counts / counts.sum()), mean, np.maximum(var, VAR_FLOOR))


def naive_bayes_predict(model: NaiveBayes, x):
    return model.predict(x), model.predict_proba(x)


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    epochs: int
    grad_norm: float

    def predict_proba(self, x) -> np.ndarray:
        """P(Manager) per row."""
        x = np.asarray(getattr(x, "x", x), dtype=np.float64)
        if x.shape[1] != len(self.weights):
            raise ShapeError("feature count does not match the classifier")
        return expit(x @ self.weights + self.bias)

    def predict(self, x, threshold=0.5) -> StatusLabels:
        return StatusLabels(np.where(self.predict_proba(x) > threshold, MANAGER, SUBORDINATE))


def logistic_objective(w, b, x, t, l2_lambda):
    """Mean log-likelihood minus ``lambda/2 * |w|^2`` (bias unpenalized); t = 1 for Manager."""
    z = x @ w + b
    ll = np.mean(t * log_expit(z) + (1 - t) * log_expit(-z))
    return float(ll - 0.5 * l2_lambda * w @ w)


def logistic_gradient(w, b, x, t, l2_lambda):
    r = t - expit(x @ w + b)
    return x.T @ r / len(t) - l2_lambda * w, float(r.mean())


def logistic_train(x, labels, l2_lambda=0.01, eta=0.1, max_epochs=1000, grad_tol=1e-6) -> LogisticModel:
    """Full-batch gradient ascent on the regularized mean log-likelihood."""
    x, y = _labeled_rows(x, labels)
    t = (y == MANAGER).astype(np.float64)
    w = np.zeros(x.shape[1])
    b = 0.0
    gnorm = np.inf
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        gw, gb = logistic_gradient(w, b, x, t, l2_lambda)
        gnorm = max(float(np.max(np.abs(gw))) if len(gw) else 0.0, abs(gb))
        if gnorm < grad_tol:
            epoch -= 1
            break
        w = w + eta * gw
        b = b + eta * gb
        if not (np.isfinite(w).all() and np.isfinite(b)):
            raise NumericalError(f"logistic regression diverged at epoch {epoch}")
    return LogisticModel(w, b, epoch, gnorm)


def logistic_predict(model: LogisticModel, x):
    return model.predict(x), model.predict_proba(x)
