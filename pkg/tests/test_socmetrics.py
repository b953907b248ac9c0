import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from statusnet.errors import BudgetExceeded
from statusnet.graph import CommGraph, StatusLabels, local_clustering
from statusnet.ingest import SyntheticConfig, generate_synthetic
from statusnet.socmetrics import (
    balance_ratios,
    balance_report,
    burt_constraint,
    clique_report,
    common_neighbors,
    constraint_scores,
    group_mean_balance,
    homophily_report,
    iter_maximal_cliques,
    maximal_cliques,
    n_to_flag,
    select_structural_holes,
)


@st.composite
def labeled_graphs(draw, max_n=12):
    n = draw(st.integers(2, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True))
    labels = draw(st.lists(st.sampled_from([0, 1, -1]), min_size=n, max_size=n))
    return CommGraph.from_edges(n, edges), StatusLabels(labels)


def complete(n):
    return CommGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


# -- structural holes ---------------------------------------------------------


def test_constraint_examples():
    assert burt_constraint(CommGraph.from_edges(2, [(0, 1)]), 0) == pytest.approx(1.0)
    star = CommGraph.from_edges(5, [(0, i) for i in range(1, 5)])
    assert burt_constraint(star, 0) == pytest.approx(0.25)
    assert burt_constraint(complete(3), 1) == pytest.approx(1.125)
    assert burt_constraint(CommGraph.from_edges(3, [(0, 1)]), 2) is None


def test_sh_tie_break_by_node_id():
    g = CommGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    rep = select_structural_holes(g, StatusLabels([0, 1, 0, 1]), rho=0.5)
    assert np.flatnonzero(rep.flagged).tolist() == [0, 1]


def test_sh_star_center_flagged():
    star = CommGraph.from_edges(5, [(0, i) for i in range(1, 5)])
    rep = select_structural_holes(star, StatusLabels([0, 1, 1, 1, 1]), rho=0.2)
    assert rep.n_flagged == 1
    assert rep.p_manager_is_sh == 1.0 and rep.p_subordinate_is_sh == 0.0
    assert rep.share_managers_among_sh == 1.0


def test_sh_rejects_bad_rho_and_unlabeled():
    g = complete(3)
    with pytest.raises(ValueError):
        select_structural_holes(g, StatusLabels([0, 1, 1]), rho=1.0)
    with pytest.raises(ValueError):
        select_structural_holes(g, StatusLabels.unknown(3))


def test_n_to_flag_rounding():
    assert n_to_flag(0.21, 100) == 21
    assert n_to_flag(0.1, 10) == 1
    assert n_to_flag(0.5, 3) == 2


@given(labeled_graphs(), st.floats(0.05, 0.95))
def test_sh_flag_count_identity(gl, rho):
    g, lab = gl
    if not lab.labeled.any():
        return
    rep = select_structural_holes(g, lab, rho)
    assert rep.n_flagged == math.ceil(round(rho * int(lab.labeled.sum()), 9))
    assert not (rep.flagged & ~lab.labeled).any()
    recon = (rep.p_manager_is_sh or 0) * lab.n_managers + (rep.p_subordinate_is_sh or 0) * lab.n_subordinates
    assert recon == pytest.approx(rep.n_flagged)


# -- homophily ----------------------------------------------------------------


def test_common_neighbors_examples(chorded_c4):
    assert common_neighbors(complete(3), 0, 1) == 1
    assert common_neighbors(CommGraph.from_edges(4, [(0, 1), (2, 3)]), 0, 2) == 0
    assert common_neighbors(chorded_c4, 1, 3) == 2
    with pytest.raises(ValueError):
        common_neighbors(chorded_c4, 1, 1)


def test_homophily_examples():
    rep = homophily_report(CommGraph.from_edges(3, [(0, 2)]), StatusLabels([0, 0, -1]))
    assert rep.mean_common_neighbors == {"MM": 0.0, "MS": None, "SS": None}
    rep = homophily_report(complete(4), StatusLabels([0, 0, 1, 1]))
    assert rep.mean_common_neighbors == {"MM": 2.0, "MS": 2.0, "SS": 2.0}
    assert rep.pairs == {"MM": 1, "MS": 4, "SS": 1}
    assert rep.ci_halfwidth["MS"] == 0.0 and rep.ci_halfwidth["MM"] is None


@given(labeled_graphs(), st.booleans())
def test_homophily_matches_pair_scan(gl, connected_only):
    g, lab = gl
    if lab.labeled.sum() < 2:
        return
    a = oracles.dense(g)
    y = lab.values
    sums = {"MM": [], "MS": [], "SS": []}
    for u in range(g.n):
        for v in range(u + 1, g.n):
            if y[u] < 0 or y[v] < 0 or (connected_only and not a[u, v]):
                continue
            key = ("MM", "MS", "SS")[y[u] + y[v]]
            sums[key].append(oracles.common_neighbors(a, u, v))
    rep = homophily_report(g, lab, connected_only)
    for key, vals in sums.items():
        assert rep.pairs[key] == len(vals)
        if vals:
            assert rep.mean_common_neighbors[key] == pytest.approx(np.mean(vals), abs=1e-12)
        else:
            assert rep.mean_common_neighbors[key] is None


# -- balance ------------------------------------------------------------------


def test_balance_examples():
    lab = StatusLabels([0, 1, 1, 1])
    assert balance_ratios(complete(4), lab, 0)[2] == 1.0
    g = CommGraph.from_edges(3, [(0, 1), (0, 2)])
    assert balance_ratios(g, StatusLabels([0, 1, 1]), 0) == (None, 0.0, 0.0)
    g = CommGraph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)])
    m_sb, s_sb, sb = balance_ratios(g, StatusLabels([0, 0, 0, 1]), 0)
    assert sb == pytest.approx(1 / 3) and m_sb == 1.0 and s_sb is None


@given(labeled_graphs())
def test_balance_matches_wedge_listing(gl):
    g, lab = gl
    a = oracles.dense(g)
    rep = balance_report(g, lab)
    for v in range(g.n):
        ref = oracles.balance_ratios(a, lab.values, v)
        got = balance_ratios(g, lab, v)
        vec = (rep.m_sb[v], rep.s_sb[v], rep.sb[v])
        for r, x, y in zip(ref, got, vec):
            if r is None:
                assert x is None and np.isnan(y)
            else:
                assert x == pytest.approx(r, abs=1e-12) and y == pytest.approx(r, abs=1e-12)
        if g.degree[v] >= 2:
            assert got[2] == pytest.approx(local_clustering(g, v), abs=1e-12)


def test_balance_group_means_exclude_undefined():
    g = CommGraph.from_edges(5, [(0, 1), (0, 2), (1, 2), (3, 4)])
    lab = StatusLabels([0, 1, 1, 0, 1])
    rep = balance_report(g, lab)
    assert rep.group_counts["M"]["sb"] == 1 and rep.group_means["M"]["sb"] == 1.0
    assert rep.group_counts["S"]["sb"] == 2
    assert group_mean_balance(g, lab, 0, 2) == 1.0
    assert np.isinf(rep.sb_odds[0]) and np.isnan(rep.sb_odds[3])


# -- cliques ------------------------------------------------------------------


def test_clique_examples(k4):
    d = maximal_cliques(k4)
    assert d.histogram == {4: 1} and d.max_size == 4
    c4 = CommGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert maximal_cliques(c4).histogram == {2: 4}
    two = CommGraph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert maximal_cliques(two).histogram == {3: 2}
    iso = maximal_cliques(CommGraph.empty(3))
    assert iso.histogram == {} and iso.isolated == 3 and iso.max_size == 1
    assert maximal_cliques(CommGraph.empty(0)).max_size == 0


def test_clique_budget():
    with pytest.raises(BudgetExceeded):
        maximal_cliques(CommGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]), budget=3)


def test_clique_report_all_managers_and_planted_k5():
    g = complete(4)
    rep = clique_report(g, StatusLabels([0] * 4))
    assert rep["M"].histogram == rep["A"].histogram
    assert rep["S"].n_cliques == 0 and rep["S"].max_size == 0

    rng = np.random.default_rng(3)
    n = 40
    edges = {(i, j) for i in range(5) for j in range(i + 1, 5)}
    edges |= {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.03}
    labels = StatusLabels([0] * 5 + [1] * (n - 5))
    rep = clique_report(CommGraph.from_edges(n, sorted(edges)), labels)
    assert 5 in rep["M"].histogram


@given(labeled_graphs(max_n=11))
def test_cliques_match_subset_search(gl):
    g, _ = gl
    a = oracles.dense(g)
    assert maximal_cliques(g).histogram == oracles.maximal_clique_histogram(a)


def test_enumerated_cliques_are_maximal():
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = oracles.random_graph(rng, 64, 0.15)
        adj = g.neighbor_sets
        seen = set()
        for c in iter_maximal_cliques(g):
            cs = frozenset(c)
            assert cs not in seen
            seen.add(cs)
            assert all(adj[u] >= cs - {u} for u in cs)
            assert not any(cs <= adj[w] for w in range(g.n) if w not in cs)


def test_rich_club_manager_clique_not_smaller():
    wins = 0
    for seed in range(10):
        ds = generate_synthetic(SyntheticConfig(n=200, p_mm=0.6, p_ss=0.05, seed=seed))
        rep = clique_report(ds.graph, ds.labels)
        wins += rep["M"].max_size >= rep["S"].max_size
    assert wins == 10


@given(labeled_graphs())
def test_constraint_matches_direct_formula(gl):
    g, _ = gl
    a = oracles.dense(g)
    scores = constraint_scores(g)
    for v in range(g.n):
        ref = oracles.burt_constraint(a, v)
        if ref is None:
            assert np.isnan(scores[v])
        else:
            assert scores[v] == pytest.approx(ref, abs=1e-10)
