import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from statusnet.errors import ConfigError, EmptyDataset, FormatError
from statusnet.graph import StatusLabels, induced_subgraph
from statusnet.ingest import (
    Channel,
    EventRecord,
    SyntheticConfig,
    build_dataset,
    events_to_text,
    generate_synthetic,
    load_prepared_edgelist,
    parse_events,
    parse_labels,
    write_labels,
)

HEADER = "src,dst,timestamp,channel,duration"


def lines(*rows, header=HEADER):
    return [header, *rows]


def test_parse_single_record():
    recs, rep = parse_events(lines("a,b,100,CALL,32"))
    assert recs == [EventRecord("a", "b", 100, Channel.CALL, 32)]
    assert rep.rows == 1 and rep.n_malformed == 0


def test_self_event_parsed_but_not_an_edge():
    recs, rep = parse_events(lines("a,a,100,SMS,", "a,b,5,SMS,"))
    assert rep.self_events == 1 and len(recs) == 2
    ds = build_dataset(recs, None, "SMS")
    assert ds.graph.n_edges == 1 and ds.node_keys == ["a", "b"]


def test_malformed_rows_reported_with_line_numbers():
    recs, rep = parse_events(
        lines("a,b,1,CALL", "b,c,2,CALL", "c,a,3,CALL", "c,a,oops,CALL", header="src,dst,timestamp,channel")
    )
    assert len(recs) == 3
    assert rep.n_malformed == 1 and rep.malformed[0][0] == 5


def test_malformed_variants_are_counted():
    bad = ["a,b,-1,CALL", "a,b,1,FAX", "a,,1,CALL", "a,b,1", "a,b,inf,CALL", "a,b,1,CALL,-3"]
    recs, rep = parse_events(lines(*bad))
    assert recs == [] and rep.n_malformed == len(bad)


def test_missing_or_wrong_header():
    with pytest.raises(FormatError):
        parse_events([])
    with pytest.raises(FormatError) as exc:
        parse_events(["a,b,1,CALL"])
    assert exc.value.line == 1


def test_comment_preamble_is_skipped():
    recs, rep = parse_events(["# made by a tool", "# second", HEADER, "a,b,1,CALL,", "x,y"])
    assert len(recs) == 1
    assert rep.malformed[0][0] == 5


def test_build_dataset_both_directions():
    recs = [EventRecord("a", "b", 0, Channel.CALL), EventRecord("b", "a", 10, Channel.CALL)]
    ds = build_dataset(recs, {"a": "M", "b": "S"}, "CALL")
    assert ds.graph.n_edges == 1
    assert dict(ds.graph.directed_events) == {(0, 1): 1, (1, 0): 1}
    assert ds.labels.tokens() == ["M", "S"]


def test_channel_filter_empty():
    recs = [EventRecord("a", "b", 0, Channel.CALL)]
    with pytest.raises(EmptyDataset):
        build_dataset(recs, None, "SMS")


def test_triangle_from_five_events_matches_pair_scan():
    raw = [("a", "b"), ("b", "a"), ("b", "c"), ("c", "a"), ("a", "c")]
    recs = [EventRecord(s, d, i, Channel.SMS) for i, (s, d) in enumerate(raw)]
    ds = build_dataset(recs, None, Channel.SMS)
    idx = ds.index
    scan = {tuple(sorted((idx[s], idx[d]))) for s, d in raw}
    assert {tuple(e) for e in ds.graph.edges.tolist()} == scan
    assert len(ds.graph.triangles) == 1


def test_min_events_threshold_and_unlabeled_nodes():
    recs = [EventRecord("a", "b", 0, Channel.CALL), EventRecord("b", "c", 0, Channel.CALL),
            EventRecord("c", "b", 1, Channel.CALL)]
    ds = build_dataset(recs, {"a": "M", "z": "S"}, "CALL", min_events=2)
    assert ds.node_keys == ["a", "b", "c", "z"]
    assert ds.graph.edges.tolist() == [[1, 2]]
    assert ds.labels.tokens() == ["M", None, None, "S"]
    with pytest.raises(ConfigError):
        build_dataset(recs, None, "CALL", min_events=0)


def test_parse_labels_errors():
    assert parse_labels(["node,status", "a,M", "b,S"]) == {"a": "M", "b": "S"}
    with pytest.raises(FormatError) as exc:
        parse_labels(["node,status", "a,M", "x,Q"])
    assert exc.value.line == 3
    with pytest.raises(FormatError):
        parse_labels(["node,status", "a,M", "a,S"])


def test_write_labels_roundtrip():
    buf = io.StringIO()
    write_labels(["a", "b", "c"], StatusLabels.from_tokens(["M", None, "S"]), buf)
    assert parse_labels(buf.getvalue().splitlines()) == {"a": "M", "c": "S"}


def test_prepared_edgelist(tmp_path):
    e = tmp_path / "edges.csv"
    lab = tmp_path / "labels.csv"
    e.write_text("src,dst,weight\nb,a,5\nb,c,2\n")
    lab.write_text("node,status\na,M\nb,S\nc,S\n")
    ds = load_prepared_edgelist(e, lab)
    assert ds.graph.n_edges == 2
    ev = dict(ds.graph.directed_events)
    assert ev[(0, 1)] == 3 and ev[(1, 0)] == 2
    assert ev[(1, 2)] == 1 and ev[(2, 1)] == 1
    lab.write_text("node,status\nx,Q\n")
    with pytest.raises(FormatError, match=":2"):
        load_prepared_edgelist(e, lab)


def test_synthetic_edge_cases():
    empty = generate_synthetic(SyntheticConfig(n=10, p_mm=0, p_ms=0, p_ss=0))
    assert empty.graph.n == 10 and empty.graph.n_edges == 0
    full = generate_synthetic(SyntheticConfig(n=4, manager_fraction=0.5, p_mm=1, p_ms=1, p_ss=1))
    assert full.graph.n_edges == 6
    with pytest.raises(ConfigError):
        SyntheticConfig(p_mm=0.1, p_ms=0.2).validate()
    with pytest.raises(ConfigError):
        generate_synthetic(SyntheticConfig(p_ss=-0.1, p_ms=0, p_mm=0))


def test_synthetic_manager_count_and_determinism():
    cfg = SyntheticConfig(n=50, manager_fraction=0.3, seed=5)
    a, b = generate_synthetic(cfg), generate_synthetic(cfg)
    assert a.labels.n_managers == 15
    assert events_to_text(a.events) == events_to_text(b.events)
    assert np.array_equal(a.graph.indices, b.graph.indices)
    assert np.array_equal(a.attributes.values, b.attributes.values)


def test_synthetic_manager_degree_exceeds_subordinate():
    wins = 0
    for seed in range(100):
        ds = generate_synthetic(SyntheticConfig(n=200, manager_fraction=0.2, seed=seed))
        deg = ds.graph.degree
        wins += deg[ds.labels.managers].mean() > deg[ds.labels.subordinates].mean()
    assert wins >= 95


def test_synthetic_manager_subgraph_denser():
    dens = []
    for seed in range(50):
        ds = generate_synthetic(SyntheticConfig(n=100, seed=seed))
        row = []
        for mask in (ds.labels.managers, ds.labels.subordinates):
            sub = induced_subgraph(ds.graph, mask).graph
            row.append(sub.n_edges / (sub.n * (sub.n - 1) / 2))
        dens.append(row)
    diff = np.array(dens) @ np.array([1.0, -1.0])
    assert diff.mean() > 3 * diff.std(ddof=1) / np.sqrt(len(diff))


@given(
    st.lists(
        st.tuples(st.sampled_from("abcdef"), st.sampled_from("abcdef"),
                  st.integers(0, 10**9), st.sampled_from(list(Channel))),
        min_size=1, max_size=30,
    )
)
def test_parse_build_serialize_roundtrip(rows):
    recs = [EventRecord(s, d, t, c) for s, d, t, c in rows]
    text = events_to_text(recs)
    parsed, rep = parse_events(text.splitlines())
    assert parsed == recs and rep.n_malformed == 0
    if any(r.channel is Channel.CALL for r in recs):
        g1 = build_dataset(recs, None, "CALL").graph
        g2 = build_dataset(parse_events(events_to_text(parsed).splitlines())[0], None, "CALL").graph
        assert np.array_equal(g1.indices, g2.indices) and np.array_equal(g1.indptr, g2.indptr)
        assert dict(g1.directed_events) == dict(g2.directed_events)
