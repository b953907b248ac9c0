"""Triangle factor graph over binary status variables and its parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, ShapeError
from ..graph import MANAGER, CommGraph, StatusLabels

# log-potential used to pin a clamped variable; finite so damping stays NaN-free
CLAMP = -1e30

# number of Subordinate members for each of the 8 joint configurations,
# configuration index = (y_u << 2) | (y_v << 1) | y_w with 0 = M, 1 = S
N_SUB = np.array([bin(c).count("1") for c in range(8)], dtype=np.int64)
TRIANGLE_TYPES = ("MMM", "MMS", "MSS", "SSS")


@dataclass(frozen=True, eq=False)
class FactorGraph:
    """Unary indicator factors per node plus one factor per closed triangle."""

    x: np.ndarray  # (n, K) node features
    triangles: np.ndarray  # (C, 3), rows u < v < w

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_params(self) -> int:
        return self.n_features + 4

    def triangle_degree(self) -> np.ndarray:
        return np.bincount(self.triangles.ravel(), minlength=self.n)


def build_factor_graph(g: CommGraph, features) -> FactorGraph:
    """Attach node features (a ``FeatureMatrix`` or array) to ``g``'s triangles."""
    x = np.asarray(getattr(features, "x", features), dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ShapeError(f"feature rows {x.shape[0] if x.ndim else 0} != nodes {g.n}")
    return FactorGraph(x, g.triangles)


@dataclass(frozen=True)
class Theta:
    """Weights: one per node feature (active for Manager) and one per triangle type."""

    node_weights: np.ndarray
    triangle_weights: np.ndarray
    l2_lambda: float = 0.01

    @classmethod
    def zeros(cls, n_features, l2_lambda=0.01):
        return cls(np.zeros(n_features), np.zeros(4), l2_lambda)

    @classmethod
    def from_vector(cls, vec, n_features, l2_lambda=0.01):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (n_features + 4,):
            raise ShapeError("parameter vector has the wrong length")
        return cls(vec[:n_features].copy(), vec[n_features:].copy(), l2_lambda)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.node_weights, self.triangle_weights])

    def check(self, fg: FactorGraph | None = None):
        v = self.vector()
        if not np.isfinite(v).all() or not np.isfinite(self.l2_lambda):
            raise NumericalError("non-finite parameters")
        if fg is not None and len(self.node_weights) != fg.n_features:
            raise ShapeError("theta does not match the factor graph's feature count")

    def penalty(self) -> float:
        v = self.vector()
        return 0.5 * self.l2_lambda * float(v @ v)


def unary_logpot(fg: FactorGraph, theta: Theta) -> np.ndarray:
    """``(n, 2)`` log-potentials; column 0 is Manager, column 1 Subordinate."""
    out = np.zeros((fg.n, 2))
    out[:, 0] = fg.x @ theta.node_weights
    return out


def triangle_logpot(theta: Theta) -> np.ndarray:
    """The 8 joint log-potentials shared by every triangle factor."""
    return np.ascontiguousarray(theta.triangle_weights[N_SUB], dtype=np.float64)


def clamp_unary(unary: np.ndarray, clamped: StatusLabels | None) -> np.ndarray:
    if clamped is None:
        return unary
    vals = clamped.values
    if len(vals) != len(unary):
        raise ShapeError("clamp labels do not match the number of nodes")
    out = unary.copy()
    out[vals == MANAGER, 1] = CLAMP
    out[vals == 1, 0] = CLAMP
    return out


def feature_counts(fg: FactorGraph, node_p_manager, tri_beliefs) -> np.ndarray:
    """Expected sufficient statistics given node P(M) and triangle beliefs."""
    node = fg.x.T @ node_p_manager
    if fg.n_triangles:
        tri = np.bincount(N_SUB, weights=tri_beliefs.sum(axis=0), minlength=4)
    else:
        tri = np.zeros(4)
    return np.concatenate([node, tri])


def configuration_counts(fg: FactorGraph, labels: StatusLabels) -> np.ndarray:
    """Sufficient statistics of a fully observed labeling."""
    y = labels.values
    if (y < 0).any():
        raise ValueError("labels must be fully observed")
    p_m = (y == MANAGER).astype(np.float64)
    tri = fg.triangles
    tri_counts = np.zeros(4)
    if len(tri):
        tri_counts = np.bincount(y[tri].sum(axis=1).astype(np.int64), minlength=4).astype(float)
    return np.concatenate([fg.x.T @ p_m, tri_counts])
