"""Per-node communication attributes, social features and indicator binning."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .graph import CommGraph, clustering_coefficients

COMM_NAMES = ("in_degree", "out_degree", "in_event", "out_event")
SOCIAL_NAMES = ("neg_constraint", "clustering", "balance", "degree", "mean_common_neighbors")
SOCIAL_FLAG_NAMES = ("has_tie", "has_wedge")
# bump whenever the raw attribute list, order or binning rule changes
FEATURE_VERSION = "statusnet-features/1"


@dataclass(frozen=True)
class CommAttributes:
    """Per-node rates per time unit; columns follow ``COMM_NAMES``."""

    values: np.ndarray
    n_time_units: int

    def __len__(self):
        return len(self.values)

    def column(self, name) -> np.ndarray:
        return self.values[:, COMM_NAMES.index(name)]


def attributes_from_counts(directed: Mapping[tuple[int, int], int], n: int, n_units: int = 1):
    """Attributes from ``(src, dst) -> count`` with distinct-contact degrees."""
    vals = np.zeros((n, 4), dtype=np.float64)
    for (s, d), c in directed.items():
        if c <= 0:
            continue
        vals[d, 0] += 1
        vals[s, 1] += 1
        vals[d, 2] += c
        vals[s, 3] += c
    return CommAttributes(vals / n_units, int(n_units))


def extract_attributes(events, node_index: Mapping[str, int], unit_seconds: float) -> CommAttributes:
    """In/out degree and in/out event counts per time unit.

    The number of time units is ``ceil(span / unit)`` over the whole log,
    at least 1. Self-events and events on unknown nodes are ignored.
    """
    n = len(node_index)
    events = list(events)
    if not events:
        return CommAttributes(np.zeros((n, 4)), 1)
    ts = [e.timestamp for e in events]
    span = max(ts) - min(ts)
    n_units = max(1, math.ceil(span / unit_seconds))
    counts: dict[tuple[int, int], int] = {}
    for e in events:
        if e.src == e.dst:
            continue
        s, d = node_index.get(e.src), node_index.get(e.dst)
        if s is None or d is None:
            continue
        counts[(s, d)] = counts.get((s, d), 0) + 1
    return attributes_from_counts(counts, n, n_units)


def social_feature_matrix(g: CommGraph) -> np.ndarray:
    """Rows follow ``SOCIAL_NAMES + SOCIAL_FLAG_NAMES``.

    Undefined values (isolated nodes, fewer than two friends) are 0 and the
    trailing indicator columns say whether they were defined.
    """
    from .socmetrics import constraint_scores

    deg = g.degree.astype(np.float64)
    neg_c = -constraint_scores(g)
    neg_c = np.where(np.isnan(neg_c), 0.0, neg_c)
    clus = clustering_coefficients(g)
    # the all-friends balance ratio coincides with local clustering
    balance = clus.copy()
    a = g.adjacency
    cn_sum = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel()
    mean_cn = np.divide(cn_sum, deg, out=np.zeros_like(deg), where=deg > 0)
    has_tie = (deg >= 1).astype(np.float64)
    has_wedge = (deg >= 2).astype(np.float64)
    return np.stack([neg_c, clus, balance, deg, mean_cn, has_tie, has_wedge], axis=1)


def social_features(g: CommGraph, v: int) -> np.ndarray:
    """``[neg_constraint, clustering, balance, degree, mean_common_neighbors]`` for ``v``."""
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range")
    return social_feature_matrix(g)[v, : len(SOCIAL_NAMES)]


def raw_feature_matrix(g: CommGraph, attrs: CommAttributes, social=True):
    """Raw attribute matrix and column names used by the models."""
    if social:
        return (
            np.hstack([attrs.values, social_feature_matrix(g)]),
            list(COMM_NAMES + SOCIAL_NAMES + SOCIAL_FLAG_NAMES),
        )
    return attrs.values.copy(), list(COMM_NAMES)


@dataclass(frozen=True)
class FeatureMatrix:
    x: np.ndarray
    feature_names: list[str]
    bin_edges: list[list[float]]
    raw_names: list[str]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def metadata(self) -> dict:
        return {
            "version": FEATURE_VERSION,
            "raw_names": list(self.raw_names),
            "feature_names": list(self.feature_names),
            "bin_edges": [list(map(float, e)) for e in self.bin_edges],
        }

    def save(self, stem) -> None:
        """Write ``<stem>.json`` (names, edges) and ``<stem>.csv`` (dense indicators)."""
        stem = Path(stem)
        stem.with_suffix(".json").write_text(json.dumps(self.metadata(), indent=2) + "\n")
        np.savetxt(stem.with_suffix(".csv"), self.x, fmt="%d", delimiter=",")

    @classmethod
    def load(cls, stem) -> "FeatureMatrix":
        stem = Path(stem)
        meta = json.loads(stem.with_suffix(".json").read_text())
        x = np.loadtxt(stem.with_suffix(".csv"), delimiter=",", ndmin=2)
        return cls(x, meta["feature_names"], meta["bin_edges"], meta["raw_names"])


def fit_bin_edges(raw: np.ndarray, n_bins: int, train=None) -> list[list[float]]:
    """Equal-frequency cut points per column, fitted on the training rows.

    Cut points at or above the column's training maximum are dropped, so a
    constant column gets no cut points (a single bin).
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    raw = np.asarray(raw, dtype=np.float64)
    rows = raw if train is None else raw[np.asarray(train)]
    if len(rows) == 0:
        raise ValueError("no training rows to fit bin edges")
    qs = np.arange(1, n_bins) / n_bins
    edges = []
    for j in range(raw.shape[1]):
        col = rows[:, j]
        cuts = np.unique(np.quantile(col, qs))
        cuts = cuts[cuts < col.max()]
        edges.append([float(c) for c in cuts])
    return edges


def apply_bins(raw: np.ndarray, bin_edges, raw_names) -> FeatureMatrix:
    """One-hot encode each column against fixed cut points (values <= cut go low)."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape[1] != len(bin_edges):
        raise ValueError("column count does not match bin edges")
    blocks, names = [], []
    for j, (name, cuts) in enumerate(zip(raw_names, bin_edges)):
        k = len(cuts) + 1
        idx = np.searchsorted(np.asarray(cuts, dtype=np.float64), raw[:, j], side="left")
        block = np.zeros((len(raw), k))
        block[np.arange(len(raw)), idx] = 1.0
        blocks.append(block)
        if k == 1:
            names.append(f"{name}[const]")
        else:
            names.extend(f"{name}[{b}]" for b in range(k))
    x = np.hstack(blocks) if blocks else np.zeros((len(raw), 0))
    return FeatureMatrix(x, names, [list(c) for c in bin_edges], list(raw_names))


def discretize(raw, n_bins=4, train=None, raw_names=None) -> FeatureMatrix:
    raw = np.asarray(raw, dtype=np.float64)
    if raw_names is None:
        raw_names = [f"x{j}" for j in range(raw.shape[1])]
    return apply_bins(raw, fit_bin_edges(raw, n_bins, train), raw_names)
