import itertools

import numpy as np
import pytest

from framesel.data import SyntheticSpec, Task, generate_synthetic
from framesel.estimators import EstimatorSpec, fit
from framesel.estimators.linear import lambda_max
from framesel.selectors import (F_CAP, EmptySelectionError, SelectionError, SelectorConfig,
                                StratificationError, _CrossValidator, _order_by_score, anova_f,
                                cv_folds, default_pool, f_regression, forward_select, frame,
                                model_select, mutual_info, rfe, run_selector, select_k_best,
                                variance_threshold)

GBT_FAST = EstimatorSpec("gbt", {"n_rounds": 15})


def _std(X):
    return (X - X.mean(axis=0)) / X.std(axis=0)


# -- filters -----------------------------------------------------------------

def test_variance_threshold_rules(rng):
    X = np.column_stack([rng.normal(size=30), np.full(30, 2.0), rng.normal(size=30)])
    assert variance_threshold(X).selected == (0, 2)
    assert variance_threshold(X[:, [0, 2]], 1e-6).selected == (0, 1)


def test_variance_threshold_median():
    rng = np.random.default_rng(17)
    X = rng.normal(size=(100, 5)) * np.array([0.5, 2.0, 1.0, 3.0, 0.7])
    direct = np.array([sum((v - sum(c) / len(c)) ** 2 for v in c) / len(c) for c in X.T])
    var = X.var(axis=0)
    np.testing.assert_allclose(var, direct, rtol=1e-12)
    res = variance_threshold(X, float(np.median(var)))
    assert res.selected == (1, 3)


def test_variance_threshold_empty():
    with pytest.raises(EmptySelectionError):
        variance_threshold(np.ones((5, 2)), 0.0)


def test_anova_indicator_is_max(rng):
    y = rng.integers(0, 2, size=50)
    X = np.column_stack([rng.normal(size=50), y.astype(float), rng.normal(size=50)])
    F = anova_f(X, y)
    assert F.argmax() == 1 and F[1] == F_CAP


def test_anova_matches_scipy(rng):
    stats = pytest.importorskip("scipy.stats")
    y = rng.integers(0, 3, size=60)
    X = rng.normal(size=(60, 4)) + y[:, None] * [0.0, 0.5, 1.0, 0.1]
    expected = [stats.f_oneway(*[X[y == c, j] for c in range(3)]).statistic for j in range(4)]
    np.testing.assert_allclose(anova_f(X, y), expected, rtol=1e-10)


def test_f_regression(rng):
    y = rng.normal(size=40)
    X = np.column_stack([y, rng.normal(size=40), 0.5 * y + rng.normal(size=40)])
    F = f_regression(X, y)
    assert F[0] == F_CAP
    r = np.corrcoef(X[:, 2], y)[0, 1]
    assert F[2] == pytest.approx(r * r * 38 / (1 - r * r), rel=1e-10)


def test_mutual_info(rng):
    y = rng.integers(0, 2, size=5000)
    X = np.column_stack([rng.normal(size=5000), y + 0.01 * rng.normal(size=5000)])
    mi = mutual_info(X, y, Task.BINARY)
    assert mi[0] < 0.01
    # one of the ten bins straddles the class boundary, costing a little information
    assert mi[1] == pytest.approx(np.log(2), abs=0.03)
    # shuffled copies carry no information either
    assert mutual_info(X[rng.permutation(5000)], y, Task.BINARY)[1] < 0.01


def test_mutual_info_regression_target(rng):
    y = rng.normal(size=2000)
    mi = mutual_info(np.column_stack([y, rng.normal(size=2000)]), y, Task.REGRESSION)
    assert mi[0] > 1.0 > 0.05 > mi[1]


def test_select_k_best_identity_and_order(rng):
    X = rng.normal(size=(40, 6))
    y = (X[:, 4] > 0).astype(int)
    res = select_k_best(X, y, 6)
    assert sorted(res.selected) == list(range(6))
    assert res.selected[0] == 4
    with pytest.raises(SelectionError):
        select_k_best(X, y, 7)


def test_select_k_best_planted():
    for seed in range(3):
        ds = generate_synthetic(SyntheticSpec(n_samples=500, n_features=50, n_informative=5,
                                              class_sep=3.0, seed=seed))
        assert set(select_k_best(ds.features, ds.target, 5).selected) == ds.informative_truth


def test_top_k_invariant_under_monotone_transform(rng):
    s = rng.exponential(size=30)
    s[[3, 9]] = s[5]      # ties resolve to the lowest index either way
    for f in (np.log1p, lambda v: 3 * v + 1, np.sqrt):
        np.testing.assert_array_equal(_order_by_score(f(s)), _order_by_score(s))
    assert list(_order_by_score(s)).index(3) < list(_order_by_score(s)).index(9)


# -- embedded ------------------------------------------------------------------

def test_model_select_lasso(rng):
    X = _std(rng.normal(size=(80, 6)))
    y = 2 * X[:, 1] - X[:, 4] + 0.1 * rng.normal(size=80)
    res = model_select(X, y, EstimatorSpec.lasso(0.1), Task.REGRESSION)
    assert set(res.selected) == {1, 4}
    lmax = lambda_max(X, y)
    with pytest.raises(EmptySelectionError):
        model_select(X, y, EstimatorSpec.lasso(lmax), Task.REGRESSION)


def test_model_select_ridge_rejected(rng):
    with pytest.raises(SelectionError, match="ridge"):
        model_select(rng.normal(size=(10, 2)), rng.normal(size=10),
                     EstimatorSpec("elastic_net", {"l1_ratio": 0.0}), Task.REGRESSION)
    with pytest.raises(SelectionError):
        SelectorConfig("model_select", estimator=EstimatorSpec("logistic"))


def test_model_select_forest_single_feature(rng):
    X = rng.normal(size=(200, 6))
    y = (X[:, 3] > 0).astype(int)
    res = model_select(X, y, EstimatorSpec("random_forest", {"n_trees": 20}))
    assert 3 in res.selected and res.selected[0] == 3


# -- rfe -----------------------------------------------------------------------

def test_rfe_drops_zero_weight_feature(rng):
    X = _std(rng.normal(size=(50, 3)))
    y = 5 * X[:, 0] + X[:, 1]
    res = rfe(X, y, EstimatorSpec("ols"), 2, task=Task.REGRESSION)
    assert res.selected == (0, 1)
    assert res.ranks.tolist() == [1, 1, 2]


def test_rfe_step_one_is_single_round(rng):
    X = rng.normal(size=(60, 10))
    y = (X[:, 0] > 0).astype(int)
    res = rfe(X, y, GBT_FAST, 4, step_fraction=1.0)
    assert len(res.stage_trace) == 1 and res.n_selected == 4


def test_rfe_d_minus_one_removes_argmin(rng):
    X = rng.normal(size=(80, 6))
    y = (X[:, 0] + X[:, 2] > 0).astype(int)
    imp = fit(GBT_FAST, X, y).feature_importance()
    worst = max(np.flatnonzero(imp == imp.min()))
    res = rfe(X, y, GBT_FAST, 5)
    assert set(range(6)) - set(res.selected) == {worst}


def test_rfe_rounds_and_ranks(rng):
    X = rng.normal(size=(60, 20))
    y = (X[:, 0] > 0).astype(int)
    res = rfe(X, y, GBT_FAST, 5, step_fraction=0.1)
    sizes = [s.size for s in res.stage_trace]
    assert sizes[0] == 18 and sizes[-1] == 5
    assert all(a > b for a, b in zip(sizes, sizes[1:]))
    assert (res.ranks[list(res.selected)] == 1).all()
    assert res.ranks.max() == len(sizes) + 1


def test_rfe_planted_recovery():
    hits = []
    for seed in range(5):
        ds = generate_synthetic(SyntheticSpec(n_samples=500, n_features=100, n_informative=10,
                                              seed=seed))
        res = rfe(ds.features, ds.target, EstimatorSpec("gbt"), 10)
        hits.append(len(set(res.selected) & ds.informative_truth))
    assert np.mean(hits) >= 8


# -- forward / frame -------------------------------------------------------------

def test_cv_folds_stratified():
    y = np.array([0] * 10 + [1] * 5)
    folds = cv_folds(y, 3, 0, True)
    assert sorted(np.concatenate(folds).tolist()) == list(range(15))
    for f in folds:
        assert np.bincount(y[f], minlength=2).tolist() in ([4, 1], [3, 2], [3, 1], [4, 2])
        assert abs(np.sum(y[f] == 1) - 5 / 3) < 1


def test_single_class_train_fold_rejected(rng):
    y = np.array([0] * 9 + [1])
    with pytest.raises(StratificationError):
        _CrossValidator(rng.normal(size=(10, 2)), y, GBT_FAST, Task.BINARY, 2, 0)


def test_forward_perfect_predictor_first(rng):
    X = rng.normal(size=(60, 5))
    y = X[:, 3].copy()
    res = forward_select(X, y, EstimatorSpec("ols"), 2, task=Task.REGRESSION)
    assert res.selected[0] == 3


def test_forward_infinite_epsilon(rng):
    X = rng.normal(size=(60, 5))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    res = forward_select(X, y, GBT_FAST, 4, epsilon=float("inf"))
    assert res.n_selected == 1


def test_forward_xor_matches_exhaustive_pair_search():
    rng = np.random.default_rng(1)
    n = 240
    # skewed margins: each XOR input alone is weakly predictive
    a = (rng.random(n) < 0.8).astype(float)
    b = (rng.random(n) < 0.8).astype(float)
    X = np.column_stack([rng.normal(size=n), a, rng.normal(size=n), rng.normal(size=n), b,
                         rng.normal(size=n)])
    y = (a != b).astype(int)
    cart = EstimatorSpec("cart", {"max_depth": 3})
    cv = _CrossValidator(X, y, cart, Task.BINARY, 3, 0)
    best_pair = max(itertools.combinations(range(6), 2), key=lambda p: (cv.score(list(p)), -p[0]))
    res = forward_select(X, y, cart, 2)
    assert set(res.selected) == set(best_pair) == {1, 4}


def test_forward_trace_non_decreasing(rng):
    X = rng.normal(size=(90, 8))
    y = (X[:, 0] + 0.5 * X[:, 5] - X[:, 2] > 0).astype(int)
    res = forward_select(X, y, GBT_FAST, 6, epsilon=0.0)
    scores = [s.score for s in res.stage_trace]
    assert all(b >= a for a, b in zip(scores, scores[1:]))
    assert res.n_selected <= 6


def test_forward_thread_independent(rng):
    X = rng.normal(size=(60, 6))
    y = (X[:, 1] > 0).astype(int)
    a = forward_select(X, y, GBT_FAST, 3, seed=4)
    b = forward_select(X, y, GBT_FAST, 3, seed=4, n_jobs=3)
    assert a.selected == b.selected


def test_frame_full_pool_equals_forward(rng):
    X = rng.normal(size=(70, 8))
    y = (X[:, 2] - X[:, 6] > 0).astype(int)
    cfg = SelectorConfig("frame", k=3, frame_pool=8, estimator=GBT_FAST, seed=5)
    a = frame(X, y, cfg)
    b = forward_select(X, y, GBT_FAST.with_seed(5), 3, seed=5)
    assert a.selected == b.selected
    assert all(s.stage == "forward" for s in a.stage_trace)


def test_frame_two_stages(rng):
    X = rng.normal(size=(80, 40))
    y = (X[:, 7] + X[:, 30] > 0).astype(int)
    res = frame(X, y, SelectorConfig("frame", k=3, estimator=GBT_FAST))
    stages = [s.stage for s in res.stage_trace]
    assert stages[0] == "rfe" and stages[-1] == "forward"
    rfe_sizes = [s.size for s in res.stage_trace if s.stage == "rfe"]
    assert rfe_sizes[-1] == default_pool(3, 40) == 13
    assert res.n_selected <= 3 and len(set(res.selected)) == res.n_selected
    assert (res.ranks[list(res.selected)] == np.arange(1, res.n_selected + 1)).all()


def test_frame_config_errors():
    with pytest.raises(SelectionError):
        SelectorConfig("frame", k=5, frame_pool=3)
    with pytest.raises(SelectionError):
        SelectorConfig("frame")
    with pytest.raises(SelectionError):
        SelectorConfig("bogus", k=1)


def test_selection_reproducible(small_planted):
    X, y = small_planted.features, small_planted.target
    for cfg in (SelectorConfig("frame", k=4, estimator=GBT_FAST, seed=3),
                SelectorConfig("mutual_info", k=4),
                SelectorConfig("model_select", estimator=EstimatorSpec("random_forest",
                                                                       {"n_trees": 10}))):
        a = run_selector(cfg, X, y, Task.BINARY)
        b = run_selector(cfg, X, y, Task.BINARY)
        assert a.selected == b.selected
        assert all(0 <= i < X.shape[1] for i in a.selected)
        assert len(set(a.selected)) == a.n_selected
        assert a.elapsed_seconds >= 0
