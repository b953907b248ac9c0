"""Status-correlated social metrics: structural holes, homophily, balance, cliques."""

from __future__ import annotations

import heapq
import math
import weakref
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
import scipy.sparse as sp

from .errors import BudgetExceeded
from .graph import MANAGER, SUBORDINATE, CommGraph, StatusLabels, induced_subgraph

DEFAULT_CLIQUE_BUDGET = 10**7
TIE_TYPES = ("MM", "MS", "SS")

_constraint_cache: "weakref.WeakKeyDictionary[CommGraph, np.ndarray]" = weakref.WeakKeyDictionary()
_cn_cache: "weakref.WeakKeyDictionary[CommGraph, dict]" = weakref.WeakKeyDictionary()
_flag_cache: "weakref.WeakKeyDictionary[CommGraph, dict]" = weakref.WeakKeyDictionary()


# -- structural holes -------------------------------------------------------


def constraint_scores(g: CommGraph) -> np.ndarray:
    """Burt's network constraint for every node; NaN for isolated nodes."""
    cached = _constraint_cache.get(g)
    if cached is not None:
        return cached
    deg = g.degree.astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    a = g.adjacency
    p = sp.diags(inv) @ a
    indirect = (p @ p).multiply(a)
    m = (p + indirect).tocsr()
    out = np.asarray(m.multiply(m).sum(axis=1)).ravel()
    out[deg == 0] = np.nan
    out.setflags(write=False)
    _constraint_cache[g] = out
    return out


def burt_constraint(g: CommGraph, v: int) -> float | None:
    """Constraint of ``v`` on the unweighted projection, ``None`` if isolated."""
    c = constraint_scores(g)[v]
    return None if np.isnan(c) else float(c)


def burt_scorer(g: CommGraph) -> np.ndarray:
    """Structural-hole score: negated constraint (higher spans more holes)."""
    return -constraint_scores(g)


Scorer = Callable[[CommGraph], np.ndarray]


@dataclass(frozen=True)
class SHReport:
    scores: np.ndarray
    flagged: np.ndarray
    rho: float
    n_flagged: int
    p_manager_is_sh: float | None
    p_subordinate_is_sh: float | None
    # composition of the flagged set, P(status | flagged)
    share_managers_among_sh: float
    share_subordinates_among_sh: float


def n_to_flag(rho: float, n_labeled: int) -> int:
    # round away float noise before the ceiling, e.g. 0.21 * 100
    return min(n_labeled, math.ceil(round(rho * n_labeled, 9)))


def _flag_mask(g, labeled, rho, scorer):
    per_graph = _flag_cache.setdefault(g, {})
    key = (scorer, rho, labeled.tobytes())
    hit = per_graph.get(key)
    if hit is not None:
        return hit
    scores = np.asarray(scorer(g), dtype=np.float64)
    cand = np.flatnonzero(labeled)
    s = scores[cand]
    # ties within 1e-12 are broken by node id; undefined scores rank last
    rank_key = np.where(np.isnan(s), np.inf, -np.round(s, 12))
    order = cand[np.lexsort((cand, rank_key))]
    mask = np.zeros(g.n, dtype=bool)
    mask[order[: n_to_flag(rho, len(cand))]] = True
    mask.setflags(write=False)
    per_graph[key] = (scores, mask)
    return scores, mask


def select_structural_holes(
    g: CommGraph, labels: StatusLabels, rho: float = 0.21, scorer: Scorer = burt_scorer
) -> SHReport:
    """Flag the top ``ceil(rho * n_labeled)`` labeled nodes by score."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    labeled = labels.labeled
    if not labeled.any():
        raise ValueError("at least one labeled node is required")
    scores, mask = _flag_mask(g, labeled, rho, scorer)
    mgr, sub = labels.managers, labels.subordinates
    n_m, n_s = int(mgr.sum()), int(sub.sum())
    f_m = int((mask & mgr).sum())
    f_s = int((mask & sub).sum())
    k = int(mask.sum())
    return SHReport(
        scores=scores,
        flagged=mask,
        rho=rho,
        n_flagged=k,
        p_manager_is_sh=f_m / n_m if n_m else None,
        p_subordinate_is_sh=f_s / n_s if n_s else None,
        share_managers_among_sh=f_m / k,
        share_subordinates_among_sh=f_s / k,
    )


# -- link homophily ---------------------------------------------------------


def common_neighbors(g: CommGraph, u: int, v: int) -> int:
    if u == v:
        raise ValueError("common_neighbors needs two distinct nodes")
    return len(g.neighbor_sets[u] & g.neighbor_sets[v])


@dataclass(frozen=True)
class HomophilyReport:
    mean_common_neighbors: dict[str, float | None]
    ci_halfwidth: dict[str, float | None]
    pairs: dict[str, int]
    connected_only: bool


def _cn_pairs(g, connected_only):
    per_graph = _cn_cache.setdefault(g, {})
    hit = per_graph.get(connected_only)
    if hit is None:
        a = g.adjacency
        cn = (a @ a).tocsr()
        if connected_only:
            cn = cn.multiply(a).tocsr()
        cn = sp.triu(cn, k=1).tocoo()
        hit = (cn.row.astype(np.int64), cn.col.astype(np.int64), cn.data.astype(np.float64))
        per_graph[connected_only] = hit
    return hit


def common_neighbor_sums(g: CommGraph, labels: StatusLabels, connected_only=False):
    """Per tie type: (pair count, sum of CN, sum of CN^2) over labeled pairs."""
    i, j, c = _cn_pairs(g, connected_only)
    lab = labels.values
    li, lj = lab[i], lab[j]
    ok = (li >= 0) & (lj >= 0)
    t = (li + lj)[ok].astype(np.int64)
    c = c[ok]
    s1 = np.bincount(t, weights=c, minlength=3)
    s2 = np.bincount(t, weights=c * c, minlength=3)
    if connected_only:
        e = g.edges
        le = lab[e[:, 0]], lab[e[:, 1]]
        both = (le[0] >= 0) & (le[1] >= 0)
        m = np.bincount((le[0] + le[1])[both].astype(np.int64), minlength=3)
    else:
        nm, ns = labels.n_managers, labels.n_subordinates
        m = np.array([nm * (nm - 1) // 2, nm * ns, ns * (ns - 1) // 2])
    return m, s1, s2


def homophily_report(g: CommGraph, labels: StatusLabels, connected_only=False) -> HomophilyReport:
    """Mean common-neighbour count per tie type with 95% normal CI half-widths."""
    if int(labels.labeled.sum()) < 2:
        raise ValueError("at least two labeled nodes are required")
    m, s1, s2 = common_neighbor_sums(g, labels, connected_only)
    means, half, pairs = {}, {}, {}
    for k, name in enumerate(TIE_TYPES):
        cnt = int(m[k])
        pairs[name] = cnt
        if cnt == 0:
            means[name] = None
            half[name] = None
            continue
        mean = s1[k] / cnt
        means[name] = float(mean)
        if cnt < 2:
            half[name] = None
        else:
            var = max(0.0, (s2[k] - cnt * mean * mean) / (cnt - 1))
            half[name] = float(1.96 * math.sqrt(var) / math.sqrt(cnt))
    return HomophilyReport(means, half, pairs, connected_only)


# -- social balance ---------------------------------------------------------


def _wedges(k):
    return k * (k - 1) / 2.0


def balance_counts(g: CommGraph, labels: StatusLabels):
    """Per node: (closed, total) wedge counts among manager-, subordinate- and all friends."""
    tri = g.triangles
    lab = labels.values
    n = g.n
    closed = np.zeros((3, n))
    for pos in range(3):
        ego = tri[:, pos]
        others = np.delete(tri, pos, axis=1)
        la, lb = lab[others[:, 0]], lab[others[:, 1]]
        closed[0] += np.bincount(ego, weights=((la == MANAGER) & (lb == MANAGER)), minlength=n)
        closed[1] += np.bincount(ego, weights=((la == SUBORDINATE) & (lb == SUBORDINATE)), minlength=n)
    closed[2] = g.triangle_counts
    a = g.adjacency
    mdeg = a @ labels.managers.astype(np.float64)
    sdeg = a @ labels.subordinates.astype(np.float64)
    total = np.stack([_wedges(mdeg), _wedges(sdeg), _wedges(g.degree.astype(np.float64))])
    return closed, total


def _ratio(closed, total):
    out = np.full(closed.shape, np.nan)
    ok = total > 0
    out[ok] = closed[ok] / total[ok]
    return out


def balance_ratios(g: CommGraph, labels: StatusLabels, v: int):
    """``(m_sb, s_sb, sb)`` for node ``v``; ``None`` where fewer than two friends."""
    nb = g.neighbors(v)
    sets = (
        nb[labels.values[nb] == MANAGER],
        nb[labels.values[nb] == SUBORDINATE],
        nb,
    )
    out = []
    for friends in sets:
        k = len(friends)
        if k < 2:
            out.append(None)
            continue
        fs = set(friends.tolist())
        closed = sum(len(g.neighbor_sets[a] & fs) for a in friends) // 2
        out.append(closed / (k * (k - 1) / 2))
    return tuple(out)


@dataclass(frozen=True)
class BalanceReport:
    m_sb: np.ndarray
    s_sb: np.ndarray
    sb: np.ndarray
    # balanced / unbalanced wedges; inf when every wedge is closed
    sb_odds: np.ndarray
    group_means: dict[str, dict[str, float | None]]
    group_counts: dict[str, dict[str, int]]


def balance_report(g: CommGraph, labels: StatusLabels) -> BalanceReport:
    closed, total = balance_counts(g, labels)
    ratios = _ratio(closed, total)
    open_ = total[2] - closed[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        odds = np.where(total[2] > 0, closed[2] / open_, np.nan)
    means: dict[str, dict[str, float | None]] = {}
    counts: dict[str, dict[str, int]] = {}
    for gname, gmask in (("M", labels.managers), ("S", labels.subordinates)):
        means[gname], counts[gname] = {}, {}
        for k, rname in enumerate(("m_sb", "s_sb", "sb")):
            vals = ratios[k][gmask]
            vals = vals[~np.isnan(vals)]
            counts[gname][rname] = int(len(vals))
            means[gname][rname] = float(vals.mean()) if len(vals) else None
    return BalanceReport(ratios[0], ratios[1], ratios[2], odds, means, counts)


def group_mean_balance(g: CommGraph, labels: StatusLabels, group: int, which: int) -> float:
    """Mean of ratio ``which`` (0 m_sb, 1 s_sb, 2 sb) over nodes of ``group``; NaN if none."""
    closed, total = balance_counts(g, labels)
    mask = (labels.values == group) & (total[which] > 0)
    if not mask.any():
        return float("nan")
    return float(np.mean(closed[which][mask] / total[which][mask]))


# -- cliques ----------------------------------------------------------------


@dataclass(frozen=True)
class CliqueDistribution:
    histogram: dict[int, int]
    max_size: int
    n_cliques: int
    isolated: int

    def as_dict(self):
        return {
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "max_size": self.max_size,
            "n_cliques": self.n_cliques,
            "isolated": self.isolated,
        }


def _degeneracy_order(adj):
    deg = [len(a) for a in adj]
    heap = [(d, v) for v, d in enumerate(deg)]
    heapq.heapify(heap)
    done = [False] * len(adj)
    order = []
    while heap:
        d, v = heapq.heappop(heap)
        if done[v] or d != deg[v]:
            continue
        done[v] = True
        order.append(v)
        for w in adj[v]:
            if not done[w]:
                deg[w] -= 1
                heapq.heappush(heap, (deg[w], w))
    return order


def iter_maximal_cliques(g: CommGraph, budget: int = DEFAULT_CLIQUE_BUDGET) -> Iterator[list[int]]:
    """Yield maximal cliques of size >= 2 (Bron-Kerbosch, Tomita pivot).

    Raises ``BudgetExceeded`` once more than ``budget`` cliques were produced.
    """
    adj = g.neighbor_sets
    found = 0

    def expand(r, p, x):
        nonlocal found
        if not p:
            if not x:
                found += 1
                if found > budget:
                    raise BudgetExceeded(f"more than {budget} maximal cliques")
                yield r
            return
        pivot = max(p | x, key=lambda u: (len(p & adj[u]), -u))
        for v in sorted(p - adj[pivot]):
            yield from expand(r + [v], p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    pos = {v: i for i, v in enumerate(_degeneracy_order(adj))}
    for v in sorted(range(g.n), key=pos.__getitem__):
        if not adj[v]:
            continue
        later = {w for w in adj[v] if pos[w] > pos[v]}
        earlier = {w for w in adj[v] if pos[w] < pos[v]}
        yield from expand([v], later, earlier)


def maximal_cliques(g: CommGraph, budget: int = DEFAULT_CLIQUE_BUDGET) -> CliqueDistribution:
    hist: Counter[int] = Counter()
    for c in iter_maximal_cliques(g, budget):
        hist[len(c)] += 1
    isolated = int((g.degree == 0).sum())
    return CliqueDistribution(
        histogram=dict(sorted(hist.items())),
        max_size=max(hist) if hist else (1 if isolated else 0),
        n_cliques=int(sum(hist.values())),
        isolated=isolated,
    )


def clique_report(g: CommGraph, labels: StatusLabels, budget: int = DEFAULT_CLIQUE_BUDGET):
    """Clique distributions of the manager subgraph, subordinate subgraph and full graph."""
    out = {}
    for name, mask in (("M", labels.managers), ("S", labels.subordinates)):
        out[name] = maximal_cliques(induced_subgraph(g, mask).graph, budget)
    out["A"] = maximal_cliques(g, budget)
    return out
