"""Communication graphs, status labels and basic topology statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyGraph
from .kernels import list_triangles

MANAGER = 0
SUBORDINATE = 1
UNKNOWN = -1

_TOKENS = {MANAGER: "M", SUBORDINATE: "S"}


@dataclass(frozen=True, eq=False)
class CommGraph:
    """Simple undirected graph on nodes ``0..n-1`` in CSR form.

    ``directed_events`` keeps per-orientation event counts; every key is an
    existing undirected edge. Instances are treated as immutable; derived
    quantities are computed lazily and cached.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    directed_events: Mapping[tuple[int, int], int] = field(default_factory=dict)
    node_meta: Mapping[str, Sequence] | None = None

    @classmethod
    def from_edges(cls, n, edges, directed_events=None, node_meta=None):
        """Build from an iterable of ``(u, v)`` pairs.

        Duplicates and both orientations collapse to one undirected edge.
        Self-loops raise ``ValueError``.
        """
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(pairs):
            if (pairs[:, 0] == pairs[:, 1]).any():
                raise ValueError("self-loops are not allowed")
            if pairs.min() < 0 or pairs.max() >= n:
                raise ValueError("edge endpoint out of range")
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        und = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(pairs) else pairs
        rows = np.concatenate([und[:, 0], und[:, 1]])
        cols = np.concatenate([und[:, 1], und[:, 0]])
        mat = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
        mat.sort_indices()
        events = dict(directed_events or {})
        edge_set = {(int(a), int(b)) for a, b in und}
        for (a, b), cnt in events.items():
            if (min(a, b), max(a, b)) not in edge_set:
                raise ValueError(f"directed events on missing edge {(a, b)}")
            if cnt < 0:
                raise ValueError("negative event count")
        return cls(
            n=int(n),
            indptr=mat.indptr.astype(np.int64),
            indices=mat.indices.astype(np.int64),
            directed_events=events,
            node_meta=node_meta,
        )

    @classmethod
    def empty(cls, n=0):
        return cls.from_edges(n, [])

    def neighbors(self, v) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return int(len(self.indices) // 2)

    @cached_property
    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``u < v``, lexicographic."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degree)
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    @cached_property
    def neighbor_sets(self) -> list[frozenset]:
        return [frozenset(self.neighbors(v).tolist()) for v in range(self.n)]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def triangles(self) -> np.ndarray:
        """Closed triangles, one row ``u < v < w`` each, sorted."""
        return list_triangles(self.indptr, self.indices)

    @cached_property
    def triangle_counts(self) -> np.ndarray:
        """Number of closed triangles through each node."""
        return np.bincount(self.triangles.ravel(), minlength=self.n)

    def has_edge(self, u, v) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)


class StatusLabels:
    """Per-node status: ``MANAGER``, ``SUBORDINATE`` or ``UNKNOWN``."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.int8).copy()
        if arr.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if not np.isin(arr, (MANAGER, SUBORDINATE, UNKNOWN)).all():
            raise ValueError("label values must be MANAGER, SUBORDINATE or UNKNOWN")
        arr.setflags(write=False)
        self.values = arr

    @classmethod
    def from_tokens(cls, tokens: Iterable[str | None]):
        lookup = {"M": MANAGER, "S": SUBORDINATE, None: UNKNOWN, "": UNKNOWN}
        return cls([lookup[t] for t in tokens])

    @classmethod
    def unknown(cls, n):
        return cls(np.full(n, UNKNOWN, dtype=np.int8))

    def tokens(self) -> list[str | None]:
        return [_TOKENS.get(int(v)) for v in self.values]

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        return isinstance(other, StatusLabels) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"StatusLabels(M={self.n_managers}, S={self.n_subordinates}, unknown={self.n_unknown})"

    @property
    def managers(self) -> np.ndarray:
        return self.values == MANAGER

    @property
    def subordinates(self) -> np.ndarray:
        return self.values == SUBORDINATE

    @property
    def labeled(self) -> np.ndarray:
        return self.values != UNKNOWN

    @property
    def n_managers(self) -> int:
        return int(self.managers.sum())

    @property
    def n_subordinates(self) -> int:
        return int(self.subordinates.sum())

    @property
    def n_unknown(self) -> int:
        return int((~self.labeled).sum())

    @property
    def fully_observed(self) -> bool:
        return bool(self.labeled.all())

    def masked(self, keep) -> "StatusLabels":
        """Copy with every node outside boolean ``keep`` set to unknown."""
        vals = np.where(np.asarray(keep, dtype=bool), self.values, UNKNOWN)
        return StatusLabels(vals)

    def take(self, idx) -> "StatusLabels":
        return StatusLabels(self.values[np.asarray(idx, dtype=np.int64)])


class Subgraph(NamedTuple):
    graph: CommGraph
    old_to_new: np.ndarray  # -1 for dropped nodes
    new_to_old: np.ndarray


@dataclass(frozen=True)
class TopologyStats:
    nodes: int
    edges: int
    avg_clustering: float | None
    assortativity: float | None
    components: int

    def as_dict(self):
        return {
            "nodes": self.nodes,
            "edges": self.edges,
            "avg_clustering": self.avg_clustering,
            "assortativity": self.assortativity,
            "components": self.components,
        }


def clustering_coefficients(g: CommGraph) -> np.ndarray:
    """Local clustering of every node; 0 where degree < 2."""
    deg = g.degree.astype(np.float64)
    wedges = deg * (deg - 1.0) / 2.0
    out = np.zeros(g.n, dtype=np.float64)
    ok = wedges > 0
    out[ok] = g.triangle_counts[ok] / wedges[ok]
    return out


def local_clustering(g: CommGraph, v: int) -> float:
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range")
    return float(clustering_coefficients(g)[v])


def avg_clustering(g: CommGraph) -> float:
    if g.n == 0:
        raise EmptyGraph("average clustering of an empty graph")
    return float(clustering_coefficients(g).mean())


def degree_assortativity(g: CommGraph) -> float | None:
    """Pearson correlation of endpoint degrees over both edge orientations.

    Returns ``None`` when undefined (no edges or zero degree variance).
    Moments are accumulated in exact integer arithmetic so regular graphs
    are detected exactly.
    """
    if g.n_edges == 0:
        return None
    deg = g.degree.astype(np.int64)
    e = g.edges
    total = 2 * len(e)
    s1 = int(np.sum(deg * deg))
    s2 = int(np.sum(deg * deg * deg))
    sxy = 2 * int(np.sum(deg[e[:, 0]] * deg[e[:, 1]]))
    var = total * s2 - s1 * s1
    if var == 0:
        return None
    cov = total * sxy - s1 * s1
    return cov / var


def connected_components(g: CommGraph) -> int:
    """Number of connected components (isolated nodes count as one each)."""
    seen = np.zeros(g.n, dtype=bool)
    count = 0
    for start in range(g.n):
        if seen[start]:
            continue
        count += 1
        seen[start] = True
        stack = [start]
        while stack:
            u = stack.pop()
            for w in g.neighbors(u):
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
    return count


def induced_subgraph(g: CommGraph, keep: Callable[[int], bool] | np.ndarray) -> Subgraph:
    """Subgraph on the kept nodes, reindexed in increasing original order."""
    if callable(keep):
        mask = np.fromiter((bool(keep(v)) for v in range(g.n)), dtype=bool, count=g.n)
    else:
        mask = np.asarray(keep, dtype=bool)
        if mask.shape != (g.n,):
            raise ValueError("keep mask has wrong length")
    new_to_old = np.flatnonzero(mask).astype(np.int64)
    old_to_new = np.full(g.n, -1, dtype=np.int64)
    old_to_new[new_to_old] = np.arange(len(new_to_old))
    e = g.edges
    ke = mask[e[:, 0]] & mask[e[:, 1]] if len(e) else np.zeros(0, dtype=bool)
    sub_edges = old_to_new[e[ke]]
    events = {
        (int(old_to_new[a]), int(old_to_new[b])): c
        for (a, b), c in g.directed_events.items()
        if mask[a] and mask[b]
    }
    meta = None
    if g.node_meta is not None:
        meta = {k: [v[i] for i in new_to_old] for k, v in g.node_meta.items()}
    sub = CommGraph.from_edges(len(new_to_old), sub_edges, events, meta)
    return Subgraph(sub, old_to_new, new_to_old)


def topology_stats(g: CommGraph) -> TopologyStats:
    return TopologyStats(
        nodes=g.n,
        edges=g.n_edges,
        avg_clustering=avg_clustering(g) if g.n else None,
        assortativity=degree_assortativity(g),
        components=connected_components(g),
    )
