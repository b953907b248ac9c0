"""Event-log parsing, dataset assembly and synthetic rich-club generation."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, EmptyDataset, FormatError
from .features import CommAttributes, attributes_from_counts, extract_attributes
from .graph import CommGraph, StatusLabels

DAY = 86400


class Channel(str, enum.Enum):
    CALL = "CALL"
    SMS = "SMS"
    EMAIL = "EMAIL"


class TimeUnit(str, enum.Enum):
    MONTH = "month"
    YEAR = "year"

    @property
    def seconds(self) -> int:
        return 30 * DAY if self is TimeUnit.MONTH else 365 * DAY


@dataclass(frozen=True, slots=True)
class EventRecord:
    src: str
    dst: str
    timestamp: float
    channel: Channel
    duration: float | None = None

    @property
    def is_self(self) -> bool:
        return self.src == self.dst


@dataclass
class ParseReport:
    rows: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)
    self_events: int = 0

    @property
    def n_malformed(self) -> int:
        return len(self.malformed)


EVENT_HEADER = ["src", "dst", "timestamp", "channel"]


def _open_lines(source):
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return fh.read().splitlines()
    return [line.rstrip("\r\n") for line in source]


def _preamble(lines):
    """Number of leading ``#`` comment lines (provenance written by the CLI)."""
    k = 0
    while k < len(lines) and lines[k].startswith("#"):
        k += 1
    return k


def _num(text):
    val = float(text)
    if not math.isfinite(val):
        raise ValueError("non-finite number")
    return int(val) if val.is_integer() and "." not in text and "e" not in text.lower() else val


def parse_events(source) -> tuple[list[EventRecord], ParseReport]:
    """Parse ``src,dst,timestamp,channel[,duration]`` CSV.

    ``source`` is a path or an iterable of text lines. Malformed rows are
    skipped and recorded in the report with their 1-based line number.
    """
    path = source if isinstance(source, (str, Path)) else None
    lines = _open_lines(source)
    k = _preamble(lines)
    if len(lines) <= k:
        raise FormatError("missing header", path=path, line=k + 1)
    header = [h.strip() for h in lines[k].split(",")]
    if header not in (EVENT_HEADER, EVENT_HEADER + ["duration"]):
        raise FormatError(
            "expected header 'src,dst,timestamp,channel[,duration]'", path=path, line=k + 1
        )
    report = ParseReport()
    records = []
    for lineno, row in enumerate(csv.reader(lines[k + 1:]), start=k + 2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        report.rows += 1
        try:
            if len(row) not in (4, 5):
                raise ValueError(f"expected 4 or 5 fields, got {len(row)}")
            src, dst = row[0].strip(), row[1].strip()
            if not src or not dst:
                raise ValueError("empty node key")
            ts = _num(row[2].strip())
            if ts < 0:
                raise ValueError("negative timestamp")
            try:
                channel = Channel(row[3].strip().upper())
            except ValueError:
                raise ValueError(f"unknown channel {row[3]!r}") from None
            duration = None
            if len(row) == 5 and row[4].strip():
                duration = _num(row[4].strip())
                if duration < 0:
                    raise ValueError("negative duration")
        except ValueError as exc:
            report.malformed.append((lineno, str(exc)))
            continue
        rec = EventRecord(src, dst, ts, channel, duration)
        if rec.is_self:
            report.self_events += 1
        records.append(rec)
    return records, report


def write_events(records: Iterable[EventRecord], dest) -> None:
    """Write records in the events CSV format (always with a duration column)."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER + ["duration"])
        for r in records:
            w.writerow(
                [r.src, r.dst, repr(r.timestamp), r.channel.value,
                 "" if r.duration is None else repr(r.duration)]
            )
    finally:
        if own:
            fh.close()


def parse_labels(source) -> dict[str, str]:
    """Parse ``node,status`` CSV with status ``M`` or ``S``."""
    path = source if isinstance(source, (str, Path)) else None
    lines = _open_lines(source)
    k = _preamble(lines)
    if len(lines) <= k or [h.strip() for h in lines[k].split(",")] != ["node", "status"]:
        raise FormatError("expected header 'node,status'", path=path, line=k + 1)
    out: dict[str, str] = {}
    for lineno, row in enumerate(csv.reader(lines[k + 1:]), start=k + 2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise FormatError(f"expected 2 fields, got {len(row)}", path=path, line=lineno)
        node, status = row[0].strip(), row[1].strip()
        if status not in ("M", "S"):
            raise FormatError(f"unknown status token {status!r}", path=path, line=lineno)
        if not node:
            raise FormatError("empty node key", path=path, line=lineno)
        if out.get(node, status) != status:
            raise FormatError(f"conflicting status for {node!r}", path=path, line=lineno)
        out[node] = status
    return out


def write_labels(keys, labels: StatusLabels, dest) -> None:
    """Write ``node,status`` rows for the labeled nodes; ``dest`` is a path or text file."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "status"])
        for key, tok in zip(keys, labels.tokens()):
            if tok is not None:
                w.writerow([key, tok])
    finally:
        if own:
            fh.close()


@dataclass
class Dataset:
    graph: CommGraph
    labels: StatusLabels
    attributes: CommAttributes
    channel: Channel
    time_unit: TimeUnit
    node_keys: list[str]
    events: list[EventRecord] | None = None

    @property
    def index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.node_keys)}


def build_dataset(
    events: Iterable[EventRecord],
    labels: Mapping[str, str] | None,
    channel: Channel | str,
    time_unit: TimeUnit | str = TimeUnit.MONTH,
    min_events: int = 1,
) -> Dataset:
    """Project one channel of an event log onto a labeled ``CommGraph``.

    An undirected edge exists when a pair exchanged at least ``min_events``
    events (both directions pooled). Labeled nodes without events are kept as
    isolated nodes; unlabeled event endpoints are kept as unknown.
    """
    channel = Channel(channel)
    time_unit = TimeUnit(time_unit)
    if min_events < 1:
        raise ConfigError("min_events must be >= 1")
    labels = dict(labels or {})
    chan = [e for e in events if e.channel is channel]
    if not chan:
        raise EmptyDataset(f"no {channel.value} events")
    keys = set(labels)
    for e in chan:
        if not e.is_self:
            keys.add(e.src)
            keys.add(e.dst)
    node_keys = sorted(keys)
    index = {k: i for i, k in enumerate(node_keys)}
    counts: dict[tuple[int, int], int] = {}
    for e in chan:
        if e.is_self:
            continue
        key = (index[e.src], index[e.dst])
        counts[key] = counts.get(key, 0) + 1
    pair_total: dict[tuple[int, int], int] = {}
    for (a, b), c in counts.items():
        k = (min(a, b), max(a, b))
        pair_total[k] = pair_total.get(k, 0) + c
    edges = [k for k, c in pair_total.items() if c >= min_events]
    kept = set(edges)
    directed = {k: c for k, c in counts.items() if (min(k), max(k)) in kept}
    g = CommGraph.from_edges(len(node_keys), sorted(edges), directed, {"key": node_keys})
    status = StatusLabels.from_tokens(labels.get(k) for k in node_keys)
    attrs = extract_attributes(chan, index, time_unit.seconds)
    return Dataset(g, status, attrs, channel, time_unit, node_keys, chan)


def load_events_dataset(events_path, labels_path, channel, time_unit="month", min_events=1):
    records, report = parse_events(events_path)
    labels = parse_labels(labels_path) if labels_path is not None else {}
    return build_dataset(records, labels, channel, time_unit, min_events), report


def load_prepared_edgelist(path_edges, path_labels, channel=Channel.EMAIL,
                           time_unit=TimeUnit.YEAR) -> Dataset:
    """Load ``src,dst,weight`` edges plus ``node,status`` labels.

    The pair weight is split across the two orientations; an odd weight puts
    the extra event on the lexicographically smaller source.
    """
    lines = _open_lines(path_edges)
    k = _preamble(lines)
    if len(lines) <= k or [h.strip() for h in lines[k].split(",")] != ["src", "dst", "weight"]:
        raise FormatError("expected header 'src,dst,weight'", path=path_edges, line=k + 1)
    weights: dict[tuple[str, str], int] = {}
    for lineno, row in enumerate(csv.reader(lines[k + 1:]), start=k + 2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise FormatError(f"expected 3 fields, got {len(row)}", path=path_edges, line=lineno)
        a, b = row[0].strip(), row[1].strip()
        try:
            w = int(row[2].strip())
        except ValueError:
            raise FormatError(f"bad weight {row[2]!r}", path=path_edges, line=lineno) from None
        if w < 1:
            raise FormatError("weight must be a positive integer", path=path_edges, line=lineno)
        if not a or not b:
            raise FormatError("empty node key", path=path_edges, line=lineno)
        if a == b:
            continue
        k = (a, b) if a < b else (b, a)
        weights[k] = weights.get(k, 0) + w
    labels = parse_labels(path_labels)
    node_keys = sorted(set(labels) | {x for k in weights for x in k})
    if not node_keys:
        raise EmptyDataset(f"{path_edges}: no edges or labels")
    index = {k: i for i, k in enumerate(node_keys)}
    directed = {}
    for (a, b), w in weights.items():
        ia, ib = index[a], index[b]
        directed[(ia, ib)] = (w + 1) // 2
        if w // 2:
            directed[(ib, ia)] = w // 2
    edges = sorted((index[a], index[b]) for a, b in weights)
    g = CommGraph.from_edges(len(node_keys), edges, directed, {"key": node_keys})
    status = StatusLabels.from_tokens(labels.get(k) for k in node_keys)
    attrs = attributes_from_counts(directed, len(node_keys), n_units=1)
    return Dataset(g, status, attrs, Channel(channel), TimeUnit(time_unit), node_keys, None)


@dataclass(frozen=True)
class SyntheticConfig:
    """Planted rich-club network: managers link densely among themselves."""

    n: int = 200
    manager_fraction: float = 0.2
    p_mm: float = 0.4
    p_ms: float = 0.1
    p_ss: float = 0.05
    event_rate_manager: float = 6.0
    event_rate_subordinate: float = 2.0
    seed: int = 0
    channel: Channel = Channel.CALL
    time_unit: TimeUnit = TimeUnit.MONTH
    span_seconds: int = 60 * DAY

    def validate(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not 0.0 < self.manager_fraction < 1.0:
            raise ConfigError("manager_fraction must lie in (0, 1)")
        for name in ("p_mm", "p_ms", "p_ss"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if not self.p_mm >= self.p_ms >= self.p_ss:
            raise ConfigError("rich club requires p_mm >= p_ms >= p_ss")
        if self.event_rate_manager < 0 or self.event_rate_subordinate < 0:
            raise ConfigError("event rates must be non-negative")
        if self.span_seconds < 1:
            raise ConfigError("span_seconds must be >= 1")


def generate_synthetic(cfg: SyntheticConfig) -> Dataset:
    """Sample a labeled event log from ``cfg``; deterministic in ``cfg.seed``.

    Each directed orientation of an edge carries Poisson(rate of source)
    events; an edge that drew zero events in both directions gets a single
    event in a fair-coin direction so that it survives graph projection.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    n_mgr = int(math.floor(n * cfg.manager_fraction))
    is_mgr = np.zeros(n, dtype=bool)
    is_mgr[rng.permutation(n)[:n_mgr]] = True

    iu, iv = np.triu_indices(n, 1)
    mu, mv = is_mgr[iu], is_mgr[iv]
    prob = np.where(mu & mv, cfg.p_mm, np.where(mu | mv, cfg.p_ms, cfg.p_ss))
    linked = rng.random(len(iu)) < prob
    eu, ev = iu[linked], iv[linked]

    rate = np.where(is_mgr, cfg.event_rate_manager, cfg.event_rate_subordinate)
    c_uv = rng.poisson(rate[eu])
    c_vu = rng.poisson(rate[ev])
    empty = (c_uv + c_vu) == 0
    coin = rng.random(int(empty.sum())) < 0.5
    c_uv[np.flatnonzero(empty)[coin]] = 1
    c_vu[np.flatnonzero(empty)[~coin]] = 1

    width = len(str(n - 1))
    keys = [f"n{i:0{width}d}" for i in range(n)]
    src = np.concatenate([np.repeat(eu, c_uv), np.repeat(ev, c_vu)])
    dst = np.concatenate([np.repeat(ev, c_uv), np.repeat(eu, c_vu)])
    ts = rng.integers(0, cfg.span_seconds, size=len(src))
    order = np.lexsort((dst, src, ts))
    events = [
        EventRecord(keys[s], keys[d], int(t), cfg.channel)
        for s, d, t in zip(src[order], dst[order], ts[order])
    ]
    labels = {k: ("M" if m else "S") for k, m in zip(keys, is_mgr)}
    if not events:
        # keep the edgeless case representable as a dataset
        g = CommGraph.from_edges(n, [], {}, {"key": keys})
        status = StatusLabels.from_tokens(labels[k] for k in keys)
        attrs = attributes_from_counts({}, n, n_units=1)
        return Dataset(g, status, attrs, cfg.channel, cfg.time_unit, keys, [])
    return build_dataset(events, labels, cfg.channel, cfg.time_unit)


def events_to_text(records) -> str:
    buf = io.StringIO()
    write_events(records, buf)
    return buf.getvalue()
