"""Label-shuffling null model: z-scores for labeled-graph statistics."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateNull, PartialLabels
from .graph import MANAGER, SUBORDINATE, CommGraph, StatusLabels
from .socmetrics import (
    TIE_TYPES,
    balance_counts,
    burt_scorer,
    common_neighbor_sums,
    select_structural_holes,
)

Z_THRESHOLD = 2.0
STAR_LEVELS = (0.05, 0.01, 0.001, 0.0001)


@dataclass(frozen=True)
class Statistic:
    name: str
    fn: Callable[[CommGraph, StatusLabels], float]

    def __call__(self, g, labels) -> float:
        return float(self.fn(g, labels))


@dataclass(frozen=True)
class PermutationReport:
    statistic: str
    observed: float
    null_mean: float
    null_std: float
    z: float | None
    p_value: float | None
    n_shuffles: int
    n_valid: int
    significant: bool
    seed: int

    @property
    def degenerate(self) -> bool:
        return self.z is None

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)

    def as_dict(self):
        return {
            "statistic": self.statistic,
            "observed": self.observed,
            "null_mean": self.null_mean,
            "null_std": self.null_std,
            "z": self.z,
            "p_value": self.p_value,
            "stars": self.stars,
            "significant": self.significant,
            "n_shuffles": self.n_shuffles,
            "n_valid": self.n_valid,
            "seed": self.seed,
        }


def significance_stars(p: float | None) -> str:
    if p is None:
        return ""
    return "*" * sum(p < lvl for lvl in STAR_LEVELS)


def shuffle_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for shuffle ``index``; independent of evaluation order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def permute_labels(labels: StatusLabels, rng: np.random.Generator) -> StatusLabels:
    """Uniform random rearrangement of the label multiset over the same nodes."""
    if not labels.fully_observed:
        raise PartialLabels("label shuffling needs every node labeled")
    return StatusLabels(rng.permutation(labels.values))


def _evaluate(g, labels, stat, seed, indices):
    out = np.empty(len(indices))
    for k, i in enumerate(indices):
        out[k] = stat(g, permute_labels(labels, shuffle_rng(seed, i)))
    return out


def permutation_test(
    g: CommGraph,
    labels: StatusLabels,
    stat: Statistic,
    n_shuffles: int = 10000,
    seed: int = 0,
    jobs: int = 1,
) -> PermutationReport:
    """Compare ``stat`` on the real labels against ``n_shuffles`` label shuffles.

    The null standard deviation is the population one. NaN statistic values
    (e.g. a group mean over an empty group) are dropped from the null sample.
    When the null sample has zero spread the z-score is undefined and a
    ``DegenerateNull`` warning is issued.
    """
    if n_shuffles < 2:
        raise ValueError("n_shuffles must be >= 2")
    if not labels.fully_observed:
        raise PartialLabels("permutation test needs every node labeled")
    observed = stat(g, labels)
    if jobs > 1:
        chunks = np.array_split(np.arange(n_shuffles), jobs)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda idx: _evaluate(g, labels, stat, seed, idx), chunks))
        null = np.concatenate(parts)
    else:
        null = _evaluate(g, labels, stat, seed, range(n_shuffles))
    valid = null[np.isfinite(null)]
    mu = float(valid.mean()) if len(valid) else float("nan")
    sigma = float(valid.std()) if len(valid) else float("nan")
    if len(valid) and valid.min() == valid.max():
        # summation noise can make the std of a constant sample nonzero
        sigma = 0.0
    z = p = None
    if len(valid) >= 2 and sigma > 0 and math.isfinite(observed):
        z = (observed - mu) / sigma
        p = math.erfc(abs(z) / math.sqrt(2.0))
    else:
        warnings.warn(f"{stat.name}: degenerate null distribution", DegenerateNull, stacklevel=2)
    return PermutationReport(
        statistic=stat.name,
        observed=observed,
        null_mean=mu,
        null_std=sigma,
        z=z,
        p_value=p,
        n_shuffles=n_shuffles,
        n_valid=int(len(valid)),
        significant=z is not None and abs(z) > Z_THRESHOLD,
        seed=seed,
    )


def _nan_if_none(x):
    return float("nan") if x is None else x


def _balance_mean(group, which):
    def fn(g, labels):
        closed, total = balance_counts(g, labels)
        mask = (labels.values == group) & (total[which] > 0)
        if not mask.any():
            return float("nan")
        return float(np.mean(closed[which][mask] / total[which][mask]))

    return fn


def _cn_mean(k):
    def fn(g, labels):
        m, s1, _ = common_neighbor_sums(g, labels)
        return float(s1[k] / m[k]) if m[k] else float("nan")

    return fn


def stat_library(rho: float = 0.21, scorer=burt_scorer) -> dict[str, Statistic]:
    """Named statistics behind the structural-hole and balance tables."""
    stats = [
        Statistic(
            "p_manager_is_sh",
            lambda g, y: _nan_if_none(select_structural_holes(g, y, rho, scorer).p_manager_is_sh),
        ),
        Statistic(
            "p_subordinate_is_sh",
            lambda g, y: _nan_if_none(select_structural_holes(g, y, rho, scorer).p_subordinate_is_sh),
        ),
        Statistic(
            "share_managers_among_sh",
            lambda g, y: select_structural_holes(g, y, rho, scorer).share_managers_among_sh,
        ),
    ]
    for gname, group in (("M", MANAGER), ("S", SUBORDINATE)):
        for which, rname in enumerate(("m_sb", "s_sb", "sb")):
            stats.append(Statistic(f"{gname}_{rname}", _balance_mean(group, which)))
    for k, tie in enumerate(TIE_TYPES):
        stats.append(Statistic(f"cn_{tie}", _cn_mean(k)))
    # label-invariant control: constant under shuffling
    stats.append(Statistic("manager_fraction", lambda g, y: y.n_managers / len(y)))
    return {s.name: s for s in stats}
