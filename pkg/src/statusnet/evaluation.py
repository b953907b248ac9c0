"""Weighted classification metrics, stratified splits and the cross-validation harness."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import logistic_train, naive_bayes_train
from .errors import ConfigError, ShapeError
from .features import COMM_NAMES, apply_bins, fit_bin_edges, raw_feature_matrix
from .graph import MANAGER, SUBORDINATE, UNKNOWN, CommGraph, StatusLabels

METHODS = ("NB", "LRC", "FGM")
METRICS = ("precision", "recall", "f1", "accuracy")


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    confusion: list[list[int]]  # rows: true M, S; columns: predicted M, S
    per_class: dict

    def as_dict(self):
        return asdict(self)


def _values(labels):
    return labels.values if isinstance(labels, StatusLabels) else np.asarray(labels, dtype=np.int8)


def evaluate(true, predicted) -> EvalReport:
    """Precision, recall and F1 averaged over classes with true-support weights."""
    t, p = _values(true), _values(predicted)
    if t.shape != p.shape:
        raise ShapeError(f"{len(t)} true labels vs {len(p)} predictions")
    if (t < 0).any() or (p < 0).any():
        raise ValueError("evaluate needs fully labeled inputs")
    conf = np.zeros((2, 2), dtype=np.int64)
    np.add.at(conf, (t.astype(np.int64), p.astype(np.int64)), 1)
    total = int(conf.sum())
    per_class = {}
    wp = wr = wf = 0.0
    for c, name in ((MANAGER, "M"), (SUBORDINATE, "S")):
        tp = conf[c, c]
        pred_c = conf[:, c].sum()
        true_c = conf[c, :].sum()
        prec = tp / pred_c if pred_c else 0.0
        rec = tp / true_c if true_c else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        per_class[name] = {"precision": float(prec), "recall": float(rec), "f1": float(f1), "support": int(true_c)}
        w = true_c / total if total else 0.0
        wp += w * prec
        wr += w * rec
        wf += w * f1
    acc = float(np.trace(conf) / total) if total else 0.0
    return EvalReport(float(wp), float(wr), float(wf), acc, conf.tolist(), per_class)


@dataclass(frozen=True)
class SplitPlan:
    k: int
    seed: int
    fold: np.ndarray  # fold index per node, -1 for unlabeled nodes

    def test_mask(self, f) -> np.ndarray:
        return self.fold == f

    def train_mask(self, f) -> np.ndarray:
        return (self.fold >= 0) & (self.fold != f)

    def sizes(self) -> list[int]:
        return [int((self.fold == f).sum()) for f in range(self.k)]


def stratified_kfold(labels: StatusLabels, k: int, seed: int = 0) -> SplitPlan:
    """Shuffle each class, then deal its nodes to folds round-robin.

    The dealing position carries over from one class to the next, which
    keeps fold sizes within one node of each other. A class with fewer
    than ``k`` members is rejected unless ``k`` equals the number of
    labeled nodes (leave-one-out).
    """
    y = labels.values
    n_lab = int((y >= 0).sum())
    if k < 2:
        raise ConfigError("k must be >= 2")
    if k > n_lab:
        raise ConfigError(f"k={k} exceeds the {n_lab} labeled nodes")
    if k != n_lab:
        for c, name in ((MANAGER, "M"), (SUBORDINATE, "S")):
            if (y == c).sum() < k:
                raise ConfigError(f"class {name} has {(y == c).sum()} nodes, fewer than k={k}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    fold = np.full(len(y), -1, dtype=np.int64)
    pos = 0
    for c in (MANAGER, SUBORDINATE):
        members = rng.permutation(np.flatnonzero(y == c))
        fold[members] = (pos + np.arange(len(members))) % k
        pos = (pos + len(members)) % k
    return SplitPlan(k, seed, fold)


@dataclass
class MethodResult:
    folds: list[EvalReport] = field(default_factory=list)
    extra: list[dict] = field(default_factory=list)

    def mean(self) -> dict:
        return {m: float(np.mean([getattr(r, m) for r in self.folds])) for m in METRICS}

    def as_dict(self):
        return {"mean": self.mean(), "folds": [r.as_dict() for r in self.folds], "extra": self.extra}


@dataclass
class CVReport:
    results: dict[str, MethodResult]
    protocol: dict

    def table(self) -> list[dict]:
        return [{"method": m, **self.results[m].mean()} for m in self.results]

    def as_dict(self):
        return {
            "protocol": self.protocol,
            "table": self.table(),
            "methods": {m: r.as_dict() for m, r in self.results.items()},
        }


def _fold_run(g, attrs, labels, plan, f, n_bins, train_cfg, methods, lrc_social):
    from .fgm import build_factor_graph, predict, train

    test = plan.test_mask(f)
    train_mask = plan.train_mask(f)
    train_idx = np.flatnonzero(train_mask)
    truth = labels.values[test]
    out = {}
    comm = attrs.values
    if "NB" in methods:
        nb = naive_bayes_train(comm[train_idx], labels.take(train_idx))
        out["NB"] = (evaluate(truth, nb.predict(comm[test]).values), {})
    raw_all, names_all = raw_feature_matrix(g, attrs, social=True)
    if "LRC" in methods:
        raw, names = (raw_all, names_all) if lrc_social else (comm, list(COMM_NAMES))
        fm = apply_bins(raw, fit_bin_edges(raw, n_bins, train_idx), names)
        lr = logistic_train(fm.x[train_idx], labels.take(train_idx))
        out["LRC"] = (evaluate(truth, lr.predict(fm.x[test]).values), {"epochs": lr.epochs})
    if "FGM" in methods:
        fm = apply_bins(raw_all, fit_bin_edges(raw_all, n_bins, train_idx), names_all)
        fg = build_factor_graph(g, fm)
        clamped = labels.masked(train_mask)
        theta, trace = train(fg, clamped, train_cfg)
        pred = predict(fg, theta, clamped, train_cfg.inference, train_cfg.lbp)
        info = {
            "epochs": trace.epochs,
            "stopped": trace.stopped,
            "final_objective": trace.objective[-1] if trace.objective else None,
            "lbp_converged": bool(pred.converged),
        }
        out["FGM"] = (evaluate(truth, pred.labels.values[test]), info)
    return out


def cross_validate(
    g: CommGraph,
    attrs,
    labels: StatusLabels,
    k: int = 5,
    seed: int = 0,
    n_bins: int = 4,
    train_cfg=None,
    methods=METHODS,
    jobs: int = 1,
    lrc_social: bool = False,
) -> CVReport:
    """Score every method on identical stratified folds.

    Bin edges are refitted on each fold's training rows. The factor graph
    model is trained transductively: training labels are clamped and all
    other nodes, including the held-out fold, stay latent.
    """
    from .fgm import TrainConfig

    train_cfg = train_cfg or TrainConfig()
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigError(f"unknown methods {unknown}")
    plan = stratified_kfold(labels, k, seed)
    args = (g, attrs, labels, plan)
    rest = (n_bins, train_cfg, tuple(methods), lrc_social)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(lambda f: _fold_run(*args, f, *rest), range(k)))
    else:
        runs = [_fold_run(*args, f, *rest) for f in range(k)]
    results = {m: MethodResult() for m in methods}
    for run in runs:
        for m in methods:
            rep, info = run[m]
            results[m].folds.append(rep)
            results[m].extra.append(info)
    protocol = {
        "scheme": "stratified_kfold",
        "k": k,
        "seed": seed,
        "fold_sizes": plan.sizes(),
        "n_bins": n_bins,
        "bins_fitted_on": "training rows of each fold",
        "NB_features": "raw communication attributes",
        "LRC_features": "binned communication and social features" if lrc_social else "binned communication attributes",
        "FGM_features": "binned communication and social features plus closed triangles",
        "FGM_setting": "transductive, training labels clamped",
        "n_unlabeled": int((labels.values == UNKNOWN).sum()),
    }
    return CVReport(results, protocol)
