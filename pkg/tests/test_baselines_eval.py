import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from statusnet.baselines import (
    VAR_FLOOR,
    logistic_gradient,
    logistic_objective,
    logistic_train,
    naive_bayes_train,
)
from statusnet.errors import ConfigError, DegenerateTraining, ShapeError
from statusnet.evaluation import cross_validate, evaluate, stratified_kfold
from statusnet.fgm import TrainConfig
from statusnet.graph import StatusLabels
from statusnet.ingest import SyntheticConfig, generate_synthetic

# -- naive Bayes ----------------------------------------------------------------


def test_nb_separated_clusters():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.normal(0, 0.1, 50), rng.normal(10, 0.1, 50)])[:, None]
    y = StatusLabels([0] * 50 + [1] * 50)
    nb = naive_bayes_train(x, y)
    assert (nb.predict(x) == y)
    assert np.array_equal(nb.predict(np.array([[0.0], [10.0]])).values, [0, 1])


def test_nb_identical_distributions_use_prior():
    x = np.tile([[1.0, 2.0], [3.0, 4.0]], (5, 1))
    y = StatusLabels([0, 0, 1, 1, 1, 0, 1, 1, 1, 1])
    nb = naive_bayes_train(np.tile([[1.0, 2.0]], (10, 1)), y)
    assert (nb.predict(x).values == 1).all()


def test_nb_zero_variance_floored():
    x = np.array([[1.0, 0.0], [1.0, 1.0], [2.0, 0.0], [2.0, 1.0]])
    nb = naive_bayes_train(x, StatusLabels([0, 0, 1, 1]))
    assert nb.var[:, 0].tolist() == [VAR_FLOOR, VAR_FLOOR]
    p = nb.predict_proba(np.array([[1.5, 0.5]]))
    assert np.isfinite(p).all()


def test_nb_single_class_and_shape():
    with pytest.raises(DegenerateTraining):
        naive_bayes_train(np.zeros((3, 1)), StatusLabels([0, 0, -1]))
    with pytest.raises(ShapeError):
        naive_bayes_train(np.zeros((3, 1)), StatusLabels([0, 1]))


# -- logistic regression --------------------------------------------------------


def test_lr_separable():
    x = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = StatusLabels([1, 1, 0, 0])
    m = logistic_train(x, y, max_epochs=20000)
    assert m.predict(x) == y
    assert m.weights[0] > 1.0
    # stationarity: regularizer balances the data term
    gw, gb = logistic_gradient(m.weights, m.bias, x, (y.values == 0).astype(float), 0.01)
    assert np.abs(gw).max() < 1e-6 and abs(gb) < 1e-6


def test_lr_zero_features_predicts_majority():
    m = logistic_train(np.zeros((5, 2)), StatusLabels([0, 0, 0, 1, 1]), max_epochs=5000)
    assert (m.predict(np.zeros((3, 2))).values == 0).all()
    assert m.predict_proba(np.zeros((1, 2)))[0] == pytest.approx(0.6, abs=1e-4)


@given(st.integers(0, 2**31))
def test_lr_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(12, 3))
    t = (rng.random(12) < 0.5).astype(float)
    w, b = rng.normal(size=3), float(rng.normal())
    gw, gb = logistic_gradient(w, b, x, t, 0.05)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        fd = (logistic_objective(w + e, b, x, t, 0.05) - logistic_objective(w - e, b, x, t, 0.05)) / (2 * h)
        assert gw[i] == pytest.approx(fd, abs=1e-7)
    fd_b = (logistic_objective(w, b + h, x, t, 0.05) - logistic_objective(w, b - h, x, t, 0.05)) / (2 * h)
    assert gb == pytest.approx(fd_b, abs=1e-7)


# -- evaluation -------------------------------------------------------------------


def _from_confusion(conf):
    t, p = [], []
    for i in range(2):
        for j in range(2):
            t += [i] * conf[i][j]
            p += [j] * conf[i][j]
    return np.array(t), np.array(p)


def test_evaluate_examples():
    y = np.array([0, 1, 1, 0])
    rep = evaluate(y, y)
    assert (rep.precision, rep.recall, rep.f1, rep.accuracy) == (1.0, 1.0, 1.0, 1.0)

    rep = evaluate(*_from_confusion([[8, 2], [3, 7]]))
    assert rep.confusion == [[8, 2], [3, 7]] and rep.accuracy == 0.75
    pm, rm, ps, rs = 8 / 11, 0.8, 7 / 9, 0.7
    fm, fs = 2 * pm * rm / (pm + rm), 2 * ps * rs / (ps + rs)
    assert rep.precision == pytest.approx((pm + ps) / 2)
    assert rep.recall == pytest.approx((rm + rs) / 2)
    assert rep.f1 == pytest.approx((fm + fs) / 2)

    truth = np.array([0] * 5 + [1] * 5)
    rep = evaluate(truth, np.ones(10, dtype=int))
    f1_s = 2 * 0.5 * 1.0 / 1.5
    assert rep.accuracy == 0.5 and rep.f1 == pytest.approx(0.5 * f1_s)
    assert rep.per_class["M"]["f1"] == 0.0


def test_evaluate_errors():
    with pytest.raises(ShapeError):
        evaluate(np.array([0, 1]), np.array([0]))
    with pytest.raises(ValueError):
        evaluate(np.array([0, -1]), np.array([0, 1]))


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_evaluate_properties(pairs):
    t = np.array([a for a, _ in pairs])
    p = np.array([b for _, b in pairs])
    rep = evaluate(t, p)
    assert rep.recall == pytest.approx(rep.accuracy, abs=1e-12)
    assert rep.accuracy == pytest.approx(np.trace(rep.confusion) / len(t))
    flipped = evaluate(1 - t, 1 - p)
    for m in ("precision", "recall", "f1", "accuracy"):
        assert getattr(flipped, m) == pytest.approx(getattr(rep, m), abs=1e-12)


# -- stratified folds --------------------------------------------------------------


def test_kfold_examples():
    lab = StatusLabels([0] * 10 + [1] * 10)
    plan = stratified_kfold(lab, 5, seed=3)
    for f in range(5):
        test = plan.test_mask(f)
        assert (test & lab.managers).sum() == 2 and (test & lab.subordinates).sum() == 2
    again = stratified_kfold(lab, 5, seed=3)
    assert np.array_equal(plan.fold, again.fold)
    loo = stratified_kfold(StatusLabels([0, 0, 1, 1]), 4)
    assert loo.sizes() == [1, 1, 1, 1]


def test_kfold_errors():
    with pytest.raises(ConfigError):
        stratified_kfold(StatusLabels([0, 0, 1, 1, 1, 1]), 3)
    with pytest.raises(ConfigError):
        stratified_kfold(StatusLabels([0, 1]), 1)
    with pytest.raises(ConfigError):
        stratified_kfold(StatusLabels([0, 1, -1]), 3)


@given(st.integers(2, 6), st.integers(0, 30), st.integers(0, 30), st.integers(0, 5), st.integers(0, 99))
def test_kfold_partition_and_stratification(k, n_m, n_s, n_u, seed):
    if n_m < k or n_s < k:
        return
    vals = [0] * n_m + [1] * n_s + [-1] * n_u
    lab = StatusLabels(np.random.default_rng(seed).permutation(vals))
    plan = stratified_kfold(lab, k, seed)
    assert ((plan.fold >= 0) == lab.labeled).all()
    sizes = plan.sizes()
    assert sum(sizes) == n_m + n_s and max(sizes) - min(sizes) <= 1
    for f in range(k):
        test = plan.test_mask(f)
        for mask, total in ((lab.managers, n_m), (lab.subordinates, n_s)):
            assert abs((test & mask).sum() - total / k) < 1 + 1e-9
        assert not (plan.train_mask(f) & test).any()


# -- harness -----------------------------------------------------------------------


def test_cross_validate_report_shape():
    ds = generate_synthetic(SyntheticConfig(n=60, seed=1))
    cfg = TrainConfig(max_epochs=10)
    rep = cross_validate(ds.graph, ds.attributes, ds.labels, k=3, seed=0, train_cfg=cfg)
    assert [r["method"] for r in rep.table()] == ["NB", "LRC", "FGM"]
    for m in ("NB", "LRC", "FGM"):
        assert len(rep.results[m].folds) == 3
        assert sum(sum(map(sum, r.confusion)) for r in rep.results[m].folds) == 60
    assert rep.protocol["k"] == 3 and rep.protocol["fold_sizes"] == [20, 20, 20]
    par = cross_validate(ds.graph, ds.attributes, ds.labels, k=3, seed=0, train_cfg=cfg, jobs=3)
    assert par.as_dict() == rep.as_dict()
    with pytest.raises(ConfigError):
        cross_validate(ds.graph, ds.attributes, ds.labels, methods=("SVM",))
