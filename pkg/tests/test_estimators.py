import itertools

import numpy as np
import pytest

from framesel.data import Task
from framesel.estimators import (BoostedModel, EstimatorError, EstimatorSpec, Tree, TreeModel,
                                 WidthMismatchError, fit, fit_cart, fit_elastic_net, fit_gbt,
                                 fit_linear_svm, fit_logistic, fit_ols, fit_random_forest)
from framesel.estimators.linear import (enet_objective, enet_smooth_gradient, lambda_max,
                                        logistic_objective, solve_elastic_net,
                                        squared_hinge_objective)
from framesel.estimators.trees import Presorted, grow_boosting_tree


def _std(X):
    return (X - X.mean(axis=0)) / X.std(axis=0)


def _central_diff(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


# -- linear ------------------------------------------------------------------

def test_ols_exact_and_extrapolation():
    x = np.arange(1.0, 8.0)[:, None]
    m = fit_ols(x, 2 * x[:, 0])
    assert m.coef[0] == pytest.approx(2.0, abs=1e-12)
    assert m.intercept == pytest.approx(0.0, abs=1e-10)
    assert np.abs(m.predict(x).values - 2 * x[:, 0]).max() < 1e-10
    assert m.predict([[5.0]]).values[0] == pytest.approx(10.0)


def test_ols_constant_target(rng):
    X = rng.normal(size=(20, 3))
    m = fit_ols(X, np.full(20, 4.0))
    np.testing.assert_allclose(m.coef, 0.0, atol=1e-12)
    assert m.intercept == pytest.approx(4.0)


def test_ols_normal_equation_oracle(rng):
    X = rng.normal(size=(50, 3))
    y = X @ [1.5, -2.0, 0.3] + 0.7 + rng.normal(size=50)
    A = np.column_stack([np.ones(50), X])
    beta = np.linalg.solve(A.T @ A, A.T @ y)
    m = fit_ols(X, y)
    np.testing.assert_allclose(m.coef, beta[1:], atol=1e-8)
    assert m.intercept == pytest.approx(beta[0], abs=1e-8)


def test_ols_rank_deficient(rng):
    x = rng.normal(size=30)
    m = fit_ols(np.column_stack([x, x]), 3 * x)
    assert np.isfinite(m.coef).all()
    assert m.coef.sum() == pytest.approx(3.0, abs=1e-6)


def test_enet_zero_lambda_is_ols(rng):
    X = _std(rng.normal(size=(40, 4)))
    y = X @ [1.0, -1.0, 0.5, 0.0] + 0.2 * rng.normal(size=40)
    m = fit_elastic_net(X, y, lam=0.0, l1_ratio=1.0,
                        spec=EstimatorSpec("elastic_net", {"tol": 1e-12, "max_sweeps": 10000}))
    np.testing.assert_allclose(m.coef, fit_ols(X, y).coef, atol=1e-6)


def test_enet_lambda_max_gives_zero(rng):
    X = _std(rng.normal(size=(40, 5)))
    y = X[:, 0] * 2 + rng.normal(size=40)
    lmax = lambda_max(X, y)
    assert lmax == pytest.approx(np.abs(X.T @ (y - y.mean())).max() / 40)
    coef, _, _ = solve_elastic_net(X, y, lmax, 1.0)
    assert not coef.any()
    coef, _, _ = solve_elastic_net(X, y, 0.99 * lmax, 1.0)
    assert coef.any()


def test_enet_grid_oracle_two_features(rng):
    X = _std(rng.normal(size=(30, 2)))
    y = X @ [0.8, -0.3] + 0.3 * rng.normal(size=30)
    lam = 0.1
    coef, _, _ = solve_elastic_net(X, y, lam, 0.5, tol=1e-12)
    f0 = enet_objective(coef, X, y, lam, 0.5)
    steps = np.arange(-50, 51) * 1e-3
    grid = [enet_objective(coef + [a, b], X, y, lam, 0.5) for a in steps for b in steps]
    assert f0 <= min(grid) + 1e-12


def test_enet_kkt(rng):
    X = _std(rng.normal(size=(60, 8)))
    y = X[:, :2] @ [1.0, -0.5] + 0.5 * rng.normal(size=60)
    lam = 0.2
    coef, _, _ = solve_elastic_net(X, y, lam, 1.0, tol=1e-12)
    rho = X.T @ (y - y.mean() - X @ coef)
    assert (coef == 0).any()
    for j in np.flatnonzero(coef == 0):
        assert abs(rho[j] / 60) <= lam + 1e-6


def test_enet_requires_standardized(rng):
    X = rng.normal(3.0, 1.0, size=(20, 2))
    with pytest.raises(ValueError, match="standardized"):
        solve_elastic_net(X, rng.normal(size=20), 0.1)


def test_gradients_match_finite_differences(rng):
    X = rng.normal(size=(25, 4))
    y01 = (rng.random(25) < 0.5).astype(float)
    for objective in (logistic_objective, squared_hinge_objective):
        for _ in range(10):
            w, b = rng.normal(size=4), rng.normal()
            _, gw, gb = objective(w, b, X, y01, 0.1)
            num = _central_diff(lambda v: objective(v[:4], v[4], X, y01, 0.1)[0], np.r_[w, b])
            np.testing.assert_allclose(np.r_[gw, gb], num, rtol=1e-5, atol=1e-8)
    yr = rng.normal(size=25)
    for _ in range(10):
        beta = rng.normal(size=4)
        num = _central_diff(lambda v: enet_objective(v, X, yr, 0.3, 0.0), beta)
        np.testing.assert_allclose(enet_smooth_gradient(beta, X, yr, 0.3, 0.0), num, rtol=1e-5)


def test_logistic_fits():
    m = fit_logistic(np.array([[-1.0], [1.0]]), np.array([0, 1]))
    assert (m.predict([[-1.0], [1.0]]).values == [0, 1]).all()
    flat = fit_logistic(np.zeros((10, 3)), np.array([0, 1] * 5))
    np.testing.assert_allclose(flat.predict(np.zeros((4, 3))).scores, 0.5, atol=1e-9)


def test_logistic_gradient_small_at_solution(rng):
    X = rng.normal(size=(80, 3))
    y = (X[:, 0] + rng.normal(size=80) > 0).astype(int)
    m = fit_logistic(X, y, EstimatorSpec("logistic", {"tol": 1e-9, "max_iter": 5000}))
    _, gw, gb = logistic_objective(m.W[0], m.b[0], X, y, 1e-4)
    assert np.linalg.norm(np.r_[gw, gb]) < 1e-6


def test_logistic_row_permutation(rng):
    X = rng.normal(size=(30, 2))
    y = (X[:, 0] > 0).astype(int)
    m = fit_logistic(X, y)
    perm = rng.permutation(30)
    np.testing.assert_array_equal(m.predict(X[perm]).scores, m.predict(X).scores[perm])


def test_svm_separable_zero_hinge():
    X = np.array([[-2.0, 0], [-1.5, 1], [1.5, 0], [2.0, -1]])
    y = np.array([0, 0, 1, 1])
    m = fit_linear_svm(X, y, EstimatorSpec("linear_svm", {"l2_lambda": 1e-6, "max_iter": 5000}))
    s = 2 * y - 1
    assert np.maximum(0, 1 - s * (X @ m.W[0] + m.b[0])).max() < 1e-2
    h = m.histories[0]
    assert all(b <= a for a, b in zip(h, h[1:]))


def test_svm_random_search_oracle():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(20, 2))
    y = (X[:, 0] - X[:, 1] + 0.8 * rng.normal(size=20) > 0).astype(int)
    spec = EstimatorSpec("linear_svm", {"l2_lambda": 0.1, "tol": 1e-10, "max_iter": 5000})
    m = fit_linear_svm(X, y, spec)
    f_fit = squared_hinge_objective(m.W[0], m.b[0], X, y, 0.1)[0]
    best = np.inf
    centre = np.r_[m.W[0], m.b[0]]
    for radius in (2.0, 0.2, 0.02):
        P = centre + rng.uniform(-radius, radius, size=(20000, 3))
        vals = [squared_hinge_objective(p[:2], p[2], X, y, 0.1)[0] for p in P]
        best = min(best, min(vals))
    assert f_fit <= best + 1e-3


def test_multiclass_one_vs_rest(rng):
    X = rng.normal(size=(90, 2))
    y = np.argmax(np.column_stack([X[:, 0], X[:, 1], -X.sum(axis=1)]), axis=1)
    for algo in ("logistic", "linear_svm", "gbt"):
        m = fit(EstimatorSpec(algo), X, y, Task.MULTICLASS)
        assert m.predict(X).values.shape == (90,)
        assert np.mean(m.predict(X).values == y) > 0.8


# -- trees ---------------------------------------------------------------------

def test_cart_single_split():
    m = fit_cart(np.array([[1.0], [2], [3], [4]]), np.array([0, 0, 1, 1]),
                 spec=EstimatorSpec("cart", {"min_leaf": 1}))
    t = m.trees[0]
    assert t.feature[0] == 0 and t.threshold[0] == 2.5 and t.depth == 1
    assert (m.predict([[1.0], [2], [3], [4]]).values == [0, 0, 1, 1]).all()


def test_cart_pure_target_is_a_leaf(rng):
    m = fit_cart(rng.normal(size=(10, 2)), np.full(10, 3.0), Task.REGRESSION)
    assert m.trees[0].n_nodes == 1
    assert (m.predict(rng.normal(size=(3, 2))).values == 3.0).all()


def test_cart_error_non_increasing_in_depth(rng):
    X = rng.normal(size=(120, 3))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0.3)).astype(int)
    errs = [np.mean(fit_cart(X, y, spec=EstimatorSpec("cart", {"max_depth": d}))
                    .predict(X).values != y) for d in range(7)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_cart_xor():
    # unbalanced margins give the root split a nonzero gain; depth 2 then solves it
    X = np.array([[1.0, 1.0]] * 16 + [[1.0, 0.0]] * 4 + [[0.0, 1.0]] * 4 + [[0.0, 0.0]])
    y = (X[:, 0] != X[:, 1]).astype(int)
    m = fit_cart(X, y, spec=EstimatorSpec("cart", {"min_leaf": 1}))
    assert (m.predict(X).values == y).all()


def test_forest_single_tree_equals_cart(rng):
    X = rng.normal(size=(60, 4))
    y = (X[:, 0] + 0.5 * X[:, 2] > 0).astype(int)
    rf = fit_random_forest(X, y, spec=EstimatorSpec(
        "random_forest", {"n_trees": 1, "bootstrap": False, "mtry": 4}))
    cart = fit_cart(X, y)
    np.testing.assert_array_equal(rf.trees[0].feature, cart.trees[0].feature)
    np.testing.assert_array_equal(rf.predict(X).values, cart.predict(X).values)


def test_forest_planted_importance_and_determinism():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(300, 8))
    y = (X[:, 2] - X[:, 6] > 0).astype(int)
    spec = EstimatorSpec("random_forest", {"n_trees": 30, "seed": 3})
    a = fit_random_forest(X, y, spec=spec)
    assert set(np.argsort(-a.feature_importance())[:2]) == {2, 6}
    b = fit_random_forest(X, y, spec=spec)
    np.testing.assert_array_equal(a.predict(X).scores, b.predict(X).scores)


def test_forest_tie_vote_goes_to_lowest_code():
    leaf = dict(feature=np.array([-1]), threshold=np.zeros(1), left=np.array([-1]),
                right=np.array([-1]), gain=np.zeros(1))
    t0 = Tree(value=np.array([[0.0, 1.0]]), **leaf)
    t1 = Tree(value=np.array([[1.0, 0.0]]), **leaf)
    m = TreeModel(EstimatorSpec("random_forest"), [t0, t1], np.array([0, 1]), 1)
    assert m.predict(np.zeros((1, 1))).values[0] == 0


def test_gbt_depth_zero_predicts_mean(rng):
    X = rng.normal(size=(30, 2))
    y = rng.normal(size=30)
    spec = EstimatorSpec("gbt", {"n_rounds": 1, "eta": 1.0, "max_depth": 0})
    m = fit_gbt(X, y, Task.REGRESSION, spec)
    np.testing.assert_allclose(m.predict(X).values, y.mean(), atol=1e-12)


def test_gbt_logistic_loss_non_increasing(rng):
    X = rng.normal(size=(100, 4))
    y = (X[:, 0] * X[:, 1] + 0.3 * rng.normal(size=100) > 0).astype(int)
    for sub in (1.0, 0.7):
        m = fit_gbt(X, y, spec=EstimatorSpec("gbt", {"n_rounds": 30, "subsample": sub}))
        h = m.loss_history[0]
        assert len(h) == 31
        if sub == 1.0:
            assert all(b <= a + 1e-12 for a, b in zip(h, h[1:]))


def test_gbt_hand_gain_six_points():
    X = np.array([[1.0], [2], [3], [4], [5], [6]])
    y = np.array([0, 0, 1, 0, 1, 1], dtype=float)
    g = 0.5 - y               # p = 0.5 at the log-odds base score of a balanced target
    h = np.full(6, 0.25)
    lam = 1.0
    G, H = g.sum(), h.sum()
    hand = []
    for cut in range(1, 6):
        GL, HL = g[:cut].sum(), h[:cut].sum()
        GR, HR = G - GL, H - HL
        hand.append(0.5 * (GL ** 2 / (HL + lam) + GR ** 2 / (HR + lam) - G ** 2 / (H + lam)))
    tree, _ = grow_boosting_tree(Presorted.of(X), g, h, max_depth=1, reg_lambda=lam,
                                 min_child_weight=0.0)
    best = int(np.argmax(hand))
    assert tree.gain[0] == pytest.approx(hand[best], abs=1e-12)
    assert tree.threshold[0] == pytest.approx(best + 1.5)
    left = tree.left[0]
    assert tree.value[left, 0] == pytest.approx(-g[:best + 1].sum() / (h[:best + 1].sum() + lam))


def test_importances():
    leaf = dict(threshold=np.zeros(3), left=np.array([1, -1, -1]),
                right=np.array([2, -1, -1]), gain=np.array([2.5, 0, 0]),
                value=np.zeros((3, 1)))
    t = Tree(feature=np.array([3, -1, -1]), **leaf)
    m = BoostedModel(EstimatorSpec("gbt"), None, [(0.0, [t], [])], 5)
    np.testing.assert_array_equal(m.feature_importance(), [0, 0, 0, 1.0, 0])
    x0 = np.arange(10.0)
    lin = fit_ols(np.column_stack([x0, np.sin(x0)]), 2 * x0)
    imp = lin.feature_importance()
    assert imp[0] > imp[1]


def test_gbt_importance_normalized(rng):
    X = rng.normal(size=(80, 5))
    y = (X[:, 1] > 0).astype(int)
    assert fit_gbt(X, y).feature_importance().sum() == pytest.approx(1.0, abs=1e-9)


def test_fits_are_deterministic(rng):
    X = rng.normal(size=(70, 4))
    y = (X[:, 0] > 0).astype(int)
    for algo in ("logistic", "linear_svm", "cart", "random_forest", "gbt"):
        spec = EstimatorSpec(algo)
        a = fit(spec, X, y).predict(X).scores
        b = fit(spec, X, y).predict(X).scores
        assert np.asarray(a).tobytes() == np.asarray(b).tobytes()


def test_width_mismatch(rng):
    m = fit(EstimatorSpec("gbt", {"n_rounds": 2}), rng.normal(size=(20, 3)),
            np.array([0, 1] * 10))
    with pytest.raises(WidthMismatchError):
        m.predict(np.zeros((2, 4)))


@pytest.mark.parametrize("algo,params", [
    ("gbt", {"eta": 0}), ("gbt", {"subsample": 1.5}), ("elastic_net", {"l1_ratio": 2}),
    ("random_forest", {"mtry": 0}), ("cart", {"bogus": 1}), ("nope", {}),
])
def test_spec_validation(algo, params):
    with pytest.raises(EstimatorError):
        EstimatorSpec(algo, params)


def test_lasso_shortcut():
    spec = EstimatorSpec.lasso(0.05)
    assert spec.algorithm == "elastic_net" and spec["l1_ratio"] == 1.0
    assert "lambda=0.05" in spec.echo()


def test_single_class_rejected(rng):
    with pytest.raises(EstimatorError):
        fit(EstimatorSpec("logistic"), rng.normal(size=(5, 2)), np.zeros(5, dtype=int))


def test_exhaustive_xor_tree_vs_all_pairs():
    # tree estimators find the interaction that a brute-force pair search also finds
    rng = np.random.default_rng(0)
    X = rng.integers(0, 2, size=(200, 5)).astype(float)
    y = (X[:, 1] != X[:, 3]).astype(int)
    acc = {}
    for pair in itertools.combinations(range(5), 2):
        m = fit_cart(X[:, pair], y, spec=EstimatorSpec("cart", {"max_depth": 2}))
        acc[pair] = np.mean(m.predict(X[:, pair]).values == y)
    assert max(acc, key=acc.get) == (1, 3) and acc[(1, 3)] == 1.0
