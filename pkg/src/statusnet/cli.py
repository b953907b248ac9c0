"""Batch command-line front end: ``statusnet <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    BudgetExceeded,
    ConfigError,
    DegenerateNull,
    EmptyDataset,
    ModelVersionError,
    StatusNetError,
)
from .features import FEATURE_VERSION, apply_bins, fit_bin_edges, raw_feature_matrix
from .graph import MANAGER, induced_subgraph, topology_stats
from .ingest import (
    Channel,
    Dataset,
    SyntheticConfig,
    TimeUnit,
    generate_synthetic,
    load_events_dataset,
    load_prepared_edgelist,
    write_events,
    write_labels,
)
from .socmetrics import (
    DEFAULT_CLIQUE_BUDGET,
    TIE_TYPES,
    balance_report,
    clique_report,
    homophily_report,
    select_structural_holes,
)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_MODEL = 4

SUBCOMMANDS = ("analyze", "nulltest", "synth", "train", "predict", "evaluate")
FORMATS = ("json", "tsv")

_UMASK = os.umask(0)
os.umask(_UMASK)


@dataclass(frozen=True)
class RunConfig:
    """Everything that can change a result; echoed into every output file.

    ``jobs`` is deliberately absent: parallelism never changes outputs.
    """

    subcommand: str
    out: str
    events: str | None = None
    labels: str | None = None
    edgelist: str | None = None
    model: str | None = None
    channel: str = "CALL"
    time_unit: str = "month"
    min_events: int = 1
    rho: float = 0.21
    shuffles: int = 10000
    seed: int = 0
    bins: int = 4
    folds: int = 5
    budget: int = DEFAULT_CLIQUE_BUDGET
    formats: tuple[str, ...] = FORMATS
    fgm: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        try:
            Channel(self.channel)
            TimeUnit(self.time_unit)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 < self.rho < 1.0:
            raise ConfigError("--rho must lie in (0, 1)")
        if self.shuffles < 2:
            raise ConfigError("--shuffles must be >= 2")
        if self.bins < 2:
            raise ConfigError("--bins must be >= 2")
        if self.folds < 2:
            raise ConfigError("--folds must be >= 2")
        if self.min_events < 1:
            raise ConfigError("--min-events must be >= 1")
        if self.budget < 1:
            raise ConfigError("--budget must be >= 1")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if any(f not in FORMATS for f in self.formats):
            raise ConfigError("--format must be json or tsv")
        needs_data = self.subcommand != "synth"
        if needs_data and (self.events is None) == (self.edgelist is None):
            raise ConfigError("give exactly one of --events or --edgelist")
        if self.subcommand in ("analyze", "nulltest", "train", "evaluate") and self.labels is None:
            raise ConfigError(f"{self.subcommand} requires --labels")
        if self.subcommand == "predict" and self.model is None:
            raise ConfigError("predict requires --model")
        if self.fgm:
            self.train_config().validate()
        if self.synth:
            self.synthetic_config().validate()

    def train_config(self):
        from .fgm import LBPConfig, TrainConfig

        f = self.fgm
        return TrainConfig(
            eta=f["eta"],
            max_epochs=f["epochs"],
            grad_tol=f["grad_tol"],
            l2_lambda=f["l2_lambda"],
            lbp=LBPConfig(f["lbp_iters"], f["damping"], f["tol"]),
        )

    def synthetic_config(self) -> SyntheticConfig:
        s = self.synth
        return SyntheticConfig(
            n=s["n"],
            manager_fraction=s["manager_fraction"],
            p_mm=s["p_mm"],
            p_ms=s["p_ms"],
            p_ss=s["p_ss"],
            event_rate_manager=s["rate_m"],
            event_rate_subordinate=s["rate_s"],
            seed=self.seed,
            channel=Channel(self.channel),
            time_unit=TimeUnit(self.time_unit),
            span_seconds=int(s["span_days"] * 86400),
        )

    def as_dict(self):
        d = asdict(self)
        d["formats"] = list(self.formats)
        return d


# -- provenance and atomic output -------------------------------------------


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


class Outputs:
    """Collects output files in memory and publishes them all at once."""

    def __init__(self, out_dir, provenance: dict):
        self.out_dir = Path(out_dir)
        self.provenance = provenance
        self.files: dict[str, str] = {}

    def add(self, name, text):
        self.files[name] = text

    def json(self, name, report):
        doc = {"provenance": self.provenance, "report": report}
        self.add(name, json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")

    def preamble(self) -> str:
        prov = json.dumps(_clean(self.provenance), sort_keys=True, separators=(",", ":"))
        return f"# statusnet {__version__}\n# provenance: {prov}\n"

    def table(self, name, header, rows):
        buf = io.StringIO()
        buf.write(self.preamble())
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        self.add(name, buf.getvalue())

    def commit(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        staged = []
        try:
            for name, text in sorted(self.files.items()):
                fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.out_dir)
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                staged.append((tmp, self.out_dir / name))
                os.chmod(tmp, 0o644 & ~_UMASK)
            for tmp, dest in staged:
                os.replace(tmp, dest)
        except BaseException:
            for tmp, _ in staged:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            raise


def _cell(v):
    if v is None:
        return "NA"
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NA"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.4f}"
    return str(v)


def _provenance(cfg: RunConfig) -> dict:
    inputs = {}
    for key in ("events", "labels", "edgelist", "model"):
        path = getattr(cfg, key)
        if path is not None:
            inputs[key] = {"path": path, "sha256": sha256_file(path)}
    return {
        "tool": "statusnet",
        "version": __version__,
        "feature_version": FEATURE_VERSION,
        "config": cfg.as_dict(),
        "inputs": inputs,
    }


# -- loading ------------------------------------------------------------------


def _check_readable(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{path}: no such file")


def load_dataset(cfg: RunConfig) -> Dataset:
    for key in ("events", "labels", "edgelist"):
        if getattr(cfg, key) is not None:
            _check_readable(getattr(cfg, key))
    if cfg.edgelist is not None:
        if cfg.labels is None:
            raise ConfigError("--edgelist requires --labels")
        return load_prepared_edgelist(cfg.edgelist, cfg.labels, cfg.channel, cfg.time_unit)
    try:
        ds, report = load_events_dataset(cfg.events, cfg.labels, cfg.channel, cfg.time_unit, cfg.min_events)
    except EmptyDataset as exc:
        raise EmptyDataset(f"{cfg.events}: {exc}") from None
    if report.rows and report.n_malformed == report.rows:
        raise EmptyDataset(f"{cfg.events}: every row is malformed")
    return ds


def _require_labels(ds: Dataset, cfg: RunConfig):
    if not ds.labels.labeled.any():
        raise EmptyDataset(f"{cfg.labels}: no labeled nodes in the graph")


# -- subcommands --------------------------------------------------------------


def cmd_analyze(cfg: RunConfig, out: Outputs, jobs: int = 1):
    ds = load_dataset(cfg)
    _require_labels(ds, cfg)
    g, y = ds.graph, ds.labels

    topo = {"A": topology_stats(g).as_dict()}
    for name, mask in (("M", y.managers), ("S", y.subordinates)):
        topo[name] = topology_stats(induced_subgraph(g, mask).graph).as_dict()
    topo_rows = [
        [name, t["nodes"], t["edges"], t["avg_clustering"], t["assortativity"], t["components"]]
        for name, t in topo.items()
    ]

    hom = {}
    hom_rows = []
    for scope, conn in (("all_pairs", False), ("connected_pairs", True)):
        h = homophily_report(g, y, connected_only=conn)
        hom[scope] = {
            "mean_common_neighbors": h.mean_common_neighbors,
            "ci95_halfwidth": h.ci_halfwidth,
            "pairs": h.pairs,
        }
        for tie in TIE_TYPES:
            hom_rows.append([scope, tie, h.pairs[tie], h.mean_common_neighbors[tie], h.ci_halfwidth[tie]])

    bal = balance_report(g, y)
    bal_rows = [
        [grp, r, bal.group_counts[grp][r], bal.group_means[grp][r]]
        for grp in ("M", "S")
        for r in ("m_sb", "s_sb", "sb")
    ]

    cliques = clique_report(g, y, cfg.budget)
    clique_rows = []
    for name, dist in cliques.items():
        for size, count in sorted(dist.histogram.items()):
            clique_rows.append([name, size, count])

    sh = select_structural_holes(g, y, cfg.rho)
    keys = np.asarray(ds.node_keys)
    sh_doc = {
        "rho": sh.rho,
        "scorer": "negated Burt constraint",
        "n_flagged": sh.n_flagged,
        "p_manager_is_sh": sh.p_manager_is_sh,
        "p_subordinate_is_sh": sh.p_subordinate_is_sh,
        "share_managers_among_sh": sh.share_managers_among_sh,
        "share_subordinates_among_sh": sh.share_subordinates_among_sh,
        "flagged_nodes": keys[sh.flagged].tolist(),
    }

    if "json" in cfg.formats:
        out.json("topology.json", topo)
        out.json("homophily.json", hom)
        out.json("balance.json", {
            "group_means": bal.group_means,
            "group_counts": bal.group_counts,
            "per_node": {
                k: {"m_sb": a, "s_sb": b, "sb": c, "sb_odds": d}
                for k, a, b, c, d in zip(ds.node_keys, bal.m_sb, bal.s_sb, bal.sb, bal.sb_odds)
            },
        })
        out.json("cliques.json", {k: v.as_dict() for k, v in cliques.items()})
        out.json("structural_holes.json", sh_doc)
    if "tsv" in cfg.formats:
        out.table("topology.tsv", ["network", "nodes", "edges", "cc", "r", "components"], topo_rows)
        out.table("homophily.tsv", ["scope", "tie", "pairs", "mean_cn", "ci95_halfwidth"], hom_rows)
        out.table("balance.tsv", ["group", "ratio", "nodes", "mean"], bal_rows)
        out.table("cliques.tsv", ["network", "size", "count"], clique_rows)
        out.table(
            "structural_holes.tsv",
            ["rho", "n_flagged", "p_manager_is_sh", "p_subordinate_is_sh",
             "share_managers_among_sh", "share_subordinates_among_sh"],
            [[sh.rho, sh.n_flagged, sh.p_manager_is_sh, sh.p_subordinate_is_sh,
              sh.share_managers_among_sh, sh.share_subordinates_among_sh]],
        )


def cmd_nulltest(cfg: RunConfig, out: Outputs, jobs: int = 1):
    from .nullmodel import permutation_test, stat_library

    ds = load_dataset(cfg)
    _require_labels(ds, cfg)
    if not ds.labels.fully_observed:
        raise ConfigError(f"{cfg.labels}: nulltest needs a status for every node in the graph")
    reports = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateNull)
        for stat in stat_library(cfg.rho).values():
            reports.append(permutation_test(ds.graph, ds.labels, stat, cfg.shuffles, cfg.seed, jobs))
    if "json" in cfg.formats:
        out.json("nulltest.json", {"statistics": [r.as_dict() for r in reports]})
    if "tsv" in cfg.formats:
        out.table(
            "nulltest.tsv",
            ["statistic", "observed", "null_mean", "null_std", "z", "p_value", "stars", "significant"],
            [[r.statistic, r.observed, r.null_mean, r.null_std, r.z, r.p_value, r.stars or "-", r.significant]
             for r in reports],
        )


def cmd_synth(cfg: RunConfig, out: Outputs, jobs: int = 1):
    ds = generate_synthetic(cfg.synthetic_config())
    buf = io.StringIO()
    buf.write(out.preamble())
    write_events(ds.events, buf)
    out.add("events.csv", buf.getvalue())
    buf = io.StringIO()
    buf.write(out.preamble())
    write_labels(ds.node_keys, ds.labels, buf)
    out.add("labels.csv", buf.getvalue())


def _features(ds: Dataset):
    return raw_feature_matrix(ds.graph, ds.attributes, social=True)


def cmd_train(cfg: RunConfig, out: Outputs, jobs: int = 1):
    from .fgm import SavedModel, build_factor_graph, train

    ds = load_dataset(cfg)
    _require_labels(ds, cfg)
    raw, names = _features(ds)
    edges = fit_bin_edges(raw, cfg.bins, np.flatnonzero(ds.labels.labeled))
    fm = apply_bins(raw, edges, names)
    tcfg = cfg.train_config()
    fg = build_factor_graph(ds.graph, fm)
    theta, trace = train(fg, ds.labels, tcfg)
    model = SavedModel(
        theta=theta,
        raw_names=fm.raw_names,
        feature_names=fm.feature_names,
        bin_edges=fm.bin_edges,
        lbp=tcfg.lbp,
        train_config=_clean(tcfg.as_dict()),
        extra={
            "provenance": _clean(out.provenance),
            "trace": {
                "epochs": trace.epochs,
                "stopped": trace.stopped,
                "exact_inference": trace.exact,
                "objective": _clean(trace.objective),
                "grad_norm": _clean(trace.grad_norm),
            },
        },
    )
    out.add("model.json", model.to_json())


def cmd_predict(cfg: RunConfig, out: Outputs, jobs: int = 1):
    from .fgm import Theta, build_factor_graph, load_model, predict
    from .graph import StatusLabels

    _check_readable(cfg.model)
    model = load_model(cfg.model)
    ds = load_dataset(cfg)
    raw, names = _features(ds)
    if list(names) != list(model.raw_names):
        raise ModelVersionError(f"{cfg.model}: model raw attributes do not match this build")
    fm = apply_bins(raw, model.bin_edges, model.raw_names)
    if fm.feature_names != model.feature_names:
        raise ModelVersionError(f"{cfg.model}: binned feature names do not match the model")
    theta = Theta(model.theta.node_weights, model.theta.triangle_weights, model.theta.l2_lambda)
    clamps = ds.labels if cfg.labels is not None else StatusLabels.unknown(ds.graph.n)
    pred = predict(build_factor_graph(ds.graph, fm), theta, clamps, lbp=model.lbp)
    buf = io.StringIO()
    buf.write(out.preamble())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "status", "confidence"])
    for key, lab, conf in zip(ds.node_keys, pred.labels.values, pred.confidence):
        w.writerow([key, "M" if lab == MANAGER else "S", f"{conf:.6f}"])
    out.add("predictions.csv", buf.getvalue())


def cmd_evaluate(cfg: RunConfig, out: Outputs, jobs: int = 1):
    from .evaluation import cross_validate

    ds = load_dataset(cfg)
    _require_labels(ds, cfg)
    rep = cross_validate(
        ds.graph, ds.attributes, ds.labels,
        k=cfg.folds, seed=cfg.seed, n_bins=cfg.bins, train_cfg=cfg.train_config(), jobs=jobs,
    )
    if "json" in cfg.formats:
        out.json("eval.json", rep.as_dict())
    if "tsv" in cfg.formats:
        rows = [[r["method"], r["precision"], r["recall"], r["f1"], r["accuracy"]] for r in rep.table()]
        out.table("eval.tsv", ["Method", "Precision", "Recall", "F1", "Accuracy"], rows)


COMMANDS = {
    "analyze": cmd_analyze,
    "nulltest": cmd_nulltest,
    "synth": cmd_synth,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
}


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="statusnet", description=__doc__)
    p.add_argument("--version", action="version", version=f"statusnet {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, data=True):
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--channel", type=str.upper, default="CALL", choices=[c.value for c in Channel])
        sp.add_argument("--time-unit", type=str.lower, default="month", choices=[t.value for t in TimeUnit])
        sp.add_argument("--format", choices=FORMATS, default=None,
                        help="write only this report format (default: both)")
        if data:
            sp.add_argument("--events", help="events CSV: src,dst,timestamp,channel[,duration]")
            sp.add_argument("--edgelist", help="prepared CSV: src,dst,weight")
            sp.add_argument("--labels", help="labels CSV: node,status")
            sp.add_argument("--min-events", type=int, default=1)
            sp.add_argument("--rho", type=float, default=0.21)
            sp.add_argument("--bins", type=int, default=4)
            sp.add_argument("--jobs", type=int, default=1, help="worker threads (results do not depend on it)")

    def fgm_opts(sp):
        sp.add_argument("--eta", type=float, default=0.05)
        sp.add_argument("--epochs", type=int, default=500)
        sp.add_argument("--grad-tol", type=float, default=1e-4)
        sp.add_argument("--lambda", dest="l2_lambda", type=float, default=0.01)
        sp.add_argument("--lbp-iters", type=int, default=100)
        sp.add_argument("--damping", type=float, default=0.5)
        sp.add_argument("--tol", type=float, default=1e-6)

    sp = sub.add_parser("analyze", help="topology, homophily, balance, cliques, structural holes")
    common(sp)
    sp.add_argument("--budget", type=int, default=DEFAULT_CLIQUE_BUDGET, help="maximum number of maximal cliques enumerated per network")

    sp = sub.add_parser("nulltest", help="label-shuffling z-scores")
    common(sp)
    sp.add_argument("--shuffles", type=int, default=10000)

    sp = sub.add_parser("synth", help="generate a planted rich-club event log")
    common(sp, data=False)
    d = SyntheticConfig()
    sp.add_argument("--n", type=int, default=d.n)
    sp.add_argument("--manager-fraction", type=float, default=d.manager_fraction)
    sp.add_argument("--p-mm", type=float, default=d.p_mm)
    sp.add_argument("--p-ms", type=float, default=d.p_ms)
    sp.add_argument("--p-ss", type=float, default=d.p_ss)
    sp.add_argument("--rate-m", type=float, default=d.event_rate_manager)
    sp.add_argument("--rate-s", type=float, default=d.event_rate_subordinate)
    sp.add_argument("--span-days", type=float, default=d.span_seconds / 86400)

    sp = sub.add_parser("train", help="fit the factor graph model")
    common(sp)
    fgm_opts(sp)

    sp = sub.add_parser("predict", help="label nodes with a trained model")
    common(sp)
    sp.add_argument("--model", required=True)

    sp = sub.add_parser("evaluate", help="cross-validated NB / LRC / FGM comparison")
    common(sp)
    fgm_opts(sp)
    sp.add_argument("--folds", type=int, default=5)
    return p


def config_from_args(args) -> RunConfig:
    a = vars(args)
    kw = {
        "subcommand": args.subcommand,
        "out": args.out,
        "seed": args.seed,
        "channel": args.channel,
        "time_unit": args.time_unit,
        "formats": FORMATS if args.format is None else (args.format,),
    }
    for key in ("events", "labels", "edgelist", "model", "min_events", "rho", "bins",
                "shuffles", "folds", "budget"):
        if key in a:
            kw[key] = a[key]
    if "eta" in a:
        kw["fgm"] = {k: a[k] for k in ("eta", "epochs", "grad_tol", "l2_lambda", "lbp_iters", "damping", "tol")}
    if args.subcommand == "synth":
        kw["synth"] = {k: a[k] for k in ("n", "manager_fraction", "p_mm", "p_ms", "p_ss",
                                         "rate_m", "rate_s", "span_days")}
    return RunConfig(**kw)


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, BudgetExceeded):
        return EXIT_BUDGET
    if isinstance(exc, ModelVersionError):
        return EXIT_MODEL
    if isinstance(exc, (ConfigError, EmptyDataset)):
        return EXIT_INPUT
    from .errors import DegenerateTraining, EmptyGraph, FormatError, PartialLabels, ShapeError

    if isinstance(exc, (FormatError, PartialLabels, ShapeError, EmptyGraph, DegenerateTraining)):
        return EXIT_INPUT
    if isinstance(exc, (OSError, UnicodeDecodeError)):
        return EXIT_INPUT
    return EXIT_OTHER


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        out = Outputs(cfg.out, _provenance(cfg))
        COMMANDS[cfg.subcommand](cfg, out, max(1, getattr(args, "jobs", 1)))
        out.commit()
    except (StatusNetError, OSError, UnicodeDecodeError, ValueError) as exc:
        print(f"statusnet {args.subcommand}: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
