import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from statusnet.features import (
    COMM_NAMES,
    SOCIAL_NAMES,
    FeatureMatrix,
    apply_bins,
    discretize,
    extract_attributes,
    fit_bin_edges,
    raw_feature_matrix,
    social_features,
)
from statusnet.graph import CommGraph
from statusnet.ingest import DAY, Channel, EventRecord, SyntheticConfig, TimeUnit, generate_synthetic


def test_paper_style_attribute_example():
    receivers = [f"r{i:02d}" for i in range(25)]
    index = {k: i for i, k in enumerate(["v"] + receivers)}
    events = [EventRecord("v", receivers[i % 25], i * DAY, Channel.CALL) for i in range(60)]
    attrs = extract_attributes(events, index, TimeUnit.MONTH.seconds)
    assert attrs.n_time_units == 2
    assert attrs.column("out_event")[0] == 30.0
    assert attrs.column("out_degree")[0] == 12.5
    assert attrs.column("in_event")[1] == pytest.approx(3 / 2)


def test_attributes_distinct_vs_count():
    index = {"a": 0, "b": 1, "c": 2}
    events = [EventRecord("a", "b", t, Channel.SMS) for t in (0, 1, 2)]
    attrs = extract_attributes(events, index, TimeUnit.MONTH.seconds)
    assert attrs.values[0].tolist() == [0, 1, 0, 3]
    assert attrs.values[2].tolist() == [0, 0, 0, 0]
    empty = extract_attributes([], index, 1.0)
    assert empty.values.shape == (3, 4) and not empty.values.any()


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 10**8)), max_size=40))
def test_degree_never_exceeds_events(rows):
    index = {str(i): i for i in range(6)}
    events = [EventRecord(str(s), str(d), t, Channel.CALL) for s, d, t in rows]
    v = extract_attributes(events, index, TimeUnit.MONTH.seconds).values
    assert (v[:, 0] <= v[:, 2] + 1e-12).all() and (v[:, 1] <= v[:, 3] + 1e-12).all()


def test_social_feature_examples():
    g = CommGraph.from_edges(4, [(0, 1), (1, 2), (0, 2)])
    assert social_features(g, 3).tolist() == [0, 0, 0, 0, 0]
    k3 = social_features(g, 0)
    assert k3[SOCIAL_NAMES.index("clustering")] == 1.0
    assert k3[SOCIAL_NAMES.index("balance")] == 1.0
    assert k3[SOCIAL_NAMES.index("degree")] == 2
    assert k3[SOCIAL_NAMES.index("mean_common_neighbors")] == 1.0
    star = CommGraph.from_edges(5, [(0, i) for i in range(1, 5)])
    col = SOCIAL_NAMES.index("neg_constraint")
    assert social_features(star, 0)[col] > social_features(star, 1)[col]
    with pytest.raises(IndexError):
        social_features(g, 9)


def test_discretize_examples():
    fm = discretize(np.array([[1.0], [2.0], [3.0], [4.0]]), n_bins=2)
    assert fm.bin_edges == [[2.5]]
    assert fm.x.tolist() == [[1, 0], [1, 0], [0, 1], [0, 1]]
    const = discretize(np.full((5, 1), 7.0), n_bins=4)
    assert const.x.shape == (5, 1) and (const.x == 1).all()
    # a value below the training minimum falls in the lowest bin
    edges = fit_bin_edges(np.array([[5.0], [6.0], [7.0], [8.0]]), 4)
    low = apply_bins(np.array([[-100.0]]), edges, ["v"])
    assert low.x[0, 0] == 1 and low.x.sum() == 1
    with pytest.raises(ValueError):
        fit_bin_edges(np.zeros((3, 1)), 1)


def test_bins_fitted_on_training_rows_only():
    raw = np.array([[0.0], [1.0], [2.0], [3.0], [100.0]])
    e_all = fit_bin_edges(raw, 2)
    e_train = fit_bin_edges(raw, 2, train=[0, 1, 2, 3])
    assert e_train == [[1.5]] and e_all != e_train


@given(st.integers(1, 30), st.integers(1, 6), st.integers(2, 6), st.integers(0, 2**31))
def test_one_hot_blocks(n, d, bins, seed):
    rng = np.random.default_rng(seed)
    raw = rng.integers(0, 5, size=(n, d)).astype(float)
    fm = discretize(raw, bins)
    start = 0
    for cuts in fm.bin_edges:
        k = len(cuts) + 1
        assert (fm.x[:, start:start + k].sum(axis=1) == 1).all()
        start += k
    assert start == fm.n_features == len(fm.feature_names)


def test_feature_matrix_save_load_roundtrip(tmp_path):
    ds = generate_synthetic(SyntheticConfig(n=40, seed=2))
    raw, names = raw_feature_matrix(ds.graph, ds.attributes)
    fm = discretize(raw, 4, raw_names=names)
    fm.save(tmp_path / "feat")
    back = FeatureMatrix.load(tmp_path / "feat")
    assert back.bin_edges == fm.bin_edges and back.feature_names == fm.feature_names
    assert np.array_equal(back.x, fm.x)
    again = apply_bins(raw, back.bin_edges, back.raw_names)
    assert np.array_equal(again.x, fm.x)


def test_raw_matrix_columns():
    ds = generate_synthetic(SyntheticConfig(n=30, seed=1))
    raw, names = raw_feature_matrix(ds.graph, ds.attributes)
    assert raw.shape == (30, len(names))
    comm, cnames = raw_feature_matrix(ds.graph, ds.attributes, social=False)
    assert cnames == list(COMM_NAMES) and comm.shape == (30, 4)
