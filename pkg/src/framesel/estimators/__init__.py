"""Deterministic supervised learners used as downstream models and selector engines.

``fit(spec, X, y, task)`` returns a fitted model exposing ``predict`` and
``feature_importance``. Multiclass problems are handled one-vs-rest by every
linear classifier and by boosting; CART and forests are natively multiclass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..data import Task
from .. import _kernels
from . import linear, trees
from .linear import (
    NotStandardizedError,
    enet_objective,
    lambda_max,
    logistic_objective,
    solve_elastic_net,
    solve_ols,
    squared_hinge_objective,
)
from .trees import Presorted, Tree, default_mtry

ALGORITHMS = ("ols", "elastic_net", "logistic", "linear_svm", "cart", "random_forest", "gbt")
LINEAR = ("ols", "elastic_net", "logistic", "linear_svm")

DEFAULTS: dict[str, dict[str, Any]] = {
    "ols": {},
    "elastic_net": {"lambda": 0.01, "l1_ratio": 1.0, "max_sweeps": 1000, "tol": 1e-6},
    "logistic": {"l2_lambda": 1e-4, "max_iter": 500, "tol": 1e-6},
    "linear_svm": {"l2_lambda": 1e-2, "max_iter": 500, "tol": 1e-6},
    "cart": {"max_depth": 10, "min_leaf": 2},
    "random_forest": {"n_trees": 100, "max_depth": 10, "min_leaf": 2, "mtry": "auto",
                      "bootstrap": True, "seed": 0},
    "gbt": {"n_rounds": 100, "eta": 0.3, "max_depth": 3, "reg_lambda": 1.0, "gamma": 0.0,
            "min_child_weight": 1.0, "subsample": 1.0, "seed": 0},
}


class EstimatorError(ValueError):
    pass


class SingleClassError(EstimatorError):
    pass


class WidthMismatchError(EstimatorError):
    pass


@dataclass(frozen=True)
class EstimatorSpec:
    algorithm: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise EstimatorError(f"unknown algorithm {self.algorithm!r}")
        unknown = set(self.params) - set(DEFAULTS[self.algorithm])
        if unknown:
            raise EstimatorError(f"{self.algorithm}: unknown hyperparameters {sorted(unknown)}")
        merged = {**DEFAULTS[self.algorithm], **self.params}
        _validate(self.algorithm, merged)
        object.__setattr__(self, "params", merged)

    @classmethod
    def lasso(cls, lam: float = 0.01, **kw) -> "EstimatorSpec":
        return cls("elastic_net", {"lambda": lam, "l1_ratio": 1.0, **kw})

    def with_seed(self, seed: int) -> "EstimatorSpec":
        if "seed" not in self.params:
            return self
        return EstimatorSpec(self.algorithm, {**self.params, "seed": int(seed)})

    def echo(self) -> str:
        inner = ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.algorithm}({inner})"

    def __getitem__(self, key):
        return self.params[key]


def _validate(algo, p):
    def positive(*keys):
        for k in keys:
            if not p[k] > 0:
                raise EstimatorError(f"{algo}: {k} must be positive")

    def nonneg(*keys):
        for k in keys:
            if p[k] < 0:
                raise EstimatorError(f"{algo}: {k} must be non-negative")

    if algo == "elastic_net":
        nonneg("lambda")
        if not 0.0 <= p["l1_ratio"] <= 1.0:
            raise EstimatorError("elastic_net: l1_ratio must lie in [0, 1]")
        positive("max_sweeps", "tol")
    elif algo in ("logistic", "linear_svm"):
        nonneg("l2_lambda")
        positive("max_iter", "tol")
    elif algo == "cart":
        nonneg("max_depth")
        positive("min_leaf")
    elif algo == "random_forest":
        positive("n_trees", "min_leaf")
        nonneg("max_depth")
        if p["mtry"] != "auto" and not (isinstance(p["mtry"], int) and p["mtry"] > 0):
            raise EstimatorError("random_forest: mtry must be 'auto' or a positive integer")
    elif algo == "gbt":
        positive("n_rounds", "eta")
        nonneg("max_depth", "reg_lambda", "gamma", "min_child_weight")
        if not 0.0 < p["subsample"] <= 1.0:
            raise EstimatorError("gbt: subsample must lie in (0, 1]")


@dataclass(frozen=True)
class Prediction:
    """Hard outputs plus continuous scores.

    For binary models ``scores`` is the positive-class score; for multiclass
    it is an ``(n, n_classes)`` matrix aligned with ``model.classes``; for
    regression it equals ``values``.
    """

    values: np.ndarray
    scores: np.ndarray


class FittedModel:
    spec: EstimatorSpec
    classes: np.ndarray | None
    train_feature_count: int

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.train_feature_count:
            raise WidthMismatchError(
                f"model trained on {self.train_feature_count} features, got input of shape {X.shape}")
        return X

    @property
    def is_classifier(self) -> bool:
        return self.classes is not None

    def predict(self, X) -> Prediction:
        raise NotImplementedError

    def feature_importance(self) -> np.ndarray:
        raise NotImplementedError


def _classes(y):
    classes = np.unique(np.asarray(y, dtype=np.intp))
    if classes.size < 2:
        raise SingleClassError("classification target has a single class")
    return classes


def _labels_from_scores(classes, scores):
    if scores.ndim == 1:
        return np.where(scores > 0.5, classes[1], classes[0])
    return classes[np.argmax(scores, axis=1)]


class LinearRegressor(FittedModel):
    """OLS or elastic net; on a classification task the class codes are regressed."""

    def __init__(self, spec, coef, intercept, classes=None, n_sweeps=0):
        self.spec = spec
        self.coef = coef
        self.intercept = intercept
        self.classes = classes
        self.train_feature_count = coef.size
        self.n_sweeps = n_sweeps

    def predict(self, X) -> Prediction:
        raw = self._check(X) @ self.coef + self.intercept
        if self.classes is None:
            return Prediction(raw, raw)
        # nearest class code
        idx = np.clip(np.searchsorted(self.classes, raw), 1, self.classes.size - 1)
        lower = self.classes[idx - 1]
        upper = self.classes[idx]
        labels = np.where(raw - lower <= upper - raw, lower, upper)
        labels = np.clip(labels, self.classes[0], self.classes[-1])
        return Prediction(labels, raw)

    def feature_importance(self) -> np.ndarray:
        return np.abs(self.coef)


class LinearClassifier(FittedModel):
    """One weight vector per one-vs-rest problem (a single one when binary)."""

    def __init__(self, spec, classes, W, b, histories):
        self.spec = spec
        self.classes = classes
        self.W = W
        self.b = b
        self.histories = histories
        self.train_feature_count = W.shape[1]

    def decision_function(self, X) -> np.ndarray:
        Z = self._check(X) @ self.W.T + self.b
        return Z[:, 0] if self.classes.size == 2 else Z

    def predict(self, X) -> Prediction:
        z = self.decision_function(X)
        if self.spec.algorithm == "logistic":
            scores = linear._sigmoid(z)
            return Prediction(_labels_from_scores(self.classes, scores), scores)
        if z.ndim == 1:
            labels = np.where(z > 0.0, self.classes[1], self.classes[0])
        else:
            labels = self.classes[np.argmax(z, axis=1)]
        return Prediction(labels, z)

    def feature_importance(self) -> np.ndarray:
        return np.abs(self.W).sum(axis=0)


class TreeModel(FittedModel):
    """A single CART tree or a forest of them."""

    def __init__(self, spec, trees_, classes, n_features):
        self.spec = spec
        self.trees = trees_
        self.classes = classes
        self.train_feature_count = n_features

    def predict(self, X) -> Prediction:
        X = self._check(X)
        if self.classes is None:
            values = np.mean([t.predict_value(X)[:, 0] for t in self.trees], axis=0)
            return Prediction(values, values)
        C = self.classes.size
        if len(self.trees) == 1:
            votes = self.trees[0].predict_value(X)
        else:
            votes = np.zeros((X.shape[0], C))
            for t in self.trees:
                # lowest code wins a tied leaf distribution, and a tied vote below
                votes[np.arange(X.shape[0]), np.argmax(t.predict_value(X), axis=1)] += 1
            votes /= len(self.trees)
        labels = self.classes[np.argmax(votes, axis=1)]
        scores = votes[:, 1] if C == 2 else votes
        return Prediction(labels, scores)

    def feature_importance(self) -> np.ndarray:
        imp = sum(t.importance(self.train_feature_count) for t in self.trees)
        total = imp.sum()
        return imp / total if total > 0 else imp


class BoostedModel(FittedModel):
    """Additive tree ensemble; one booster per class in the one-vs-rest case."""

    def __init__(self, spec, classes, boosters, n_features):
        self.spec = spec
        self.classes = classes
        self.boosters = boosters  # list of (base_score, [trees], loss_history)
        self.train_feature_count = n_features
        self._stacks = None

    def raw_scores(self, X) -> np.ndarray:
        X = np.ascontiguousarray(self._check(X), dtype=np.float64)
        eta = self.spec["eta"]
        if self._stacks is None:
            self._stacks = [trees.stack_trees(t) if t else None for _, t, _ in self.boosters]
        out = []
        for (base, _, _), stack in zip(self.boosters, self._stacks):
            if stack is None:
                out.append(np.full(X.shape[0], base))
            else:
                out.append(_kernels.ensemble_predict(*stack, X, float(eta), float(base)))
        return np.column_stack(out)

    def predict(self, X) -> Prediction:
        raw = self.raw_scores(X)
        if self.classes is None:
            return Prediction(raw[:, 0], raw[:, 0])
        prob = linear._sigmoid(raw)
        scores = prob[:, 0] if self.classes.size == 2 else prob
        return Prediction(_labels_from_scores(self.classes, scores), scores)

    @property
    def loss_history(self):
        return [h for _, _, h in self.boosters]

    def feature_importance(self) -> np.ndarray:
        imp = np.zeros(self.train_feature_count)
        for _, trees_, _ in self.boosters:
            for t in trees_:
                imp += t.importance(self.train_feature_count)
        total = imp.sum()
        return imp / total if total > 0 else imp


def _is_classification(task) -> bool:
    return Task(task).is_classification


def fit_ols(X, y, task=Task.REGRESSION, spec=None) -> LinearRegressor:
    spec = spec or EstimatorSpec("ols")
    classes = _classes(y) if _is_classification(task) else None
    coef, intercept = solve_ols(X, y)
    return LinearRegressor(spec, coef, intercept, classes)


def fit_elastic_net(X, y, lam=None, l1_ratio=None, task=Task.REGRESSION, spec=None
                    ) -> LinearRegressor:
    spec = spec or EstimatorSpec("elastic_net")
    lam = spec["lambda"] if lam is None else lam
    l1_ratio = spec["l1_ratio"] if l1_ratio is None else l1_ratio
    classes = _classes(y) if _is_classification(task) else None
    coef, intercept, sweeps = solve_elastic_net(X, y, lam, l1_ratio, spec["max_sweeps"],
                                                spec["tol"])
    return LinearRegressor(spec, coef, intercept, classes, sweeps)


def _fit_linear_classifier(X, y, spec, objective):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    classes = _classes(y)
    targets = [classes[1]] if classes.size == 2 else list(classes)
    W, b, hist = [], [], []
    for c in targets:
        y01 = (y == c).astype(np.float64)
        lam = spec["l2_lambda"]
        w, bb, h = linear.gradient_descent(lambda w, b: objective(w, b, X, y01, lam),
                                           X.shape[1], spec["max_iter"], spec["tol"])
        W.append(w)
        b.append(bb)
        hist.append(h)
    return LinearClassifier(spec, classes, np.array(W), np.array(b), hist)


def fit_logistic(X, y, spec=None) -> LinearClassifier:
    return _fit_linear_classifier(X, y, spec or EstimatorSpec("logistic"), logistic_objective)


def fit_linear_svm(X, y, spec=None) -> LinearClassifier:
    return _fit_linear_classifier(X, y, spec or EstimatorSpec("linear_svm"),
                                  squared_hinge_objective)


def fit_cart(X, y, task=Task.BINARY, spec=None, presorted=None) -> TreeModel:
    spec = spec or EstimatorSpec("cart")
    ps = presorted or Presorted.of(X)
    n, d = ps.X.shape
    if n < 2 * spec["min_leaf"]:
        raise EstimatorError(f"cart needs at least {2 * spec['min_leaf']} rows, got {n}")
    if _is_classification(task):
        classes, codes = np.unique(np.asarray(y, dtype=np.intp), return_inverse=True)
        tree = trees.grow_classification_tree(ps, codes, classes.size, None, spec["max_depth"],
                                              spec["min_leaf"])
        return TreeModel(spec, [tree], classes, d)
    tree = trees.grow_regression_tree(ps, y, None, spec["max_depth"], spec["min_leaf"])
    return TreeModel(spec, [tree], None, d)


def fit_random_forest(X, y, task=Task.BINARY, spec=None, presorted=None) -> TreeModel:
    """Bagged CART trees with per-split feature sampling.

    Tree ``t`` draws its bootstrap and feature subsets from a generator keyed
    by ``(seed, t)``, so results do not depend on evaluation order.
    """
    spec = spec or EstimatorSpec("random_forest")
    ps = presorted or Presorted.of(X)
    n, d = ps.X.shape
    if n < 2 * spec["min_leaf"]:
        raise EstimatorError(f"random_forest needs at least {2 * spec['min_leaf']} rows, got {n}")
    clf = _is_classification(task)
    mtry = default_mtry(d, clf) if spec["mtry"] == "auto" else min(spec["mtry"], d)
    if clf:
        classes, codes = np.unique(np.asarray(y, dtype=np.intp), return_inverse=True)
    forest = []
    for t in range(spec["n_trees"]):
        rng = np.random.default_rng([spec["seed"], t])
        weight = (np.bincount(rng.integers(0, n, size=n), minlength=n)
                  if spec["bootstrap"] else None)
        if clf:
            tree = trees.grow_classification_tree(ps, codes, classes.size, weight,
                                                  spec["max_depth"], spec["min_leaf"], mtry, rng)
        else:
            tree = trees.grow_regression_tree(ps, y, weight, spec["max_depth"],
                                              spec["min_leaf"], mtry, rng)
        forest.append(tree)
    return TreeModel(spec, forest, classes if clf else None, d)


def _boost(ps, target, spec, logistic, rng):
    n = ps.X.shape[0]
    if logistic:
        p = target.mean()
        base = float(np.log(p / (1 - p)))
    else:
        base = float(target.mean())
    eta = spec["eta"]
    if spec["subsample"] >= 1.0:
        *parts, sizes, history = _kernels.gbt_boost(
            ps.X, ps.Xt, ps.order, np.ascontiguousarray(target), logistic, base,
            int(spec["n_rounds"]), float(eta), int(spec["max_depth"]),
            float(spec["reg_lambda"]), float(spec["gamma"]), float(spec["min_child_weight"]))
        feature, threshold, left, right, gain, value = parts
        trees_ = [trees.Tree(feature[t, :m].copy(), threshold[t, :m].copy(),
                             left[t, :m].copy(), right[t, :m].copy(), gain[t, :m].copy(),
                             value[t, :m, None].copy())
                  for t, m in enumerate(sizes)]
        return base, trees_, [float(h) for h in history]
    raw = np.full(n, base)
    trees_, history = [], []
    for _ in range(spec["n_rounds"]):
        if logistic:
            p = linear._sigmoid(raw)
            grad = p - target
            hess = p * (1.0 - p)
            history.append(float(np.mean(np.logaddexp(0.0, raw) - target * raw)))
        else:
            grad = raw - target
            hess = np.ones(n)
            history.append(float(0.5 * np.mean(grad ** 2)))
        active = rng.random(n) < spec["subsample"]
        tree, _ = trees.grow_boosting_tree(ps, grad, hess, spec["max_depth"],
                                           spec["reg_lambda"], spec["gamma"],
                                           spec["min_child_weight"], active)
        trees_.append(tree)
        raw += eta * tree.predict_value(ps.X)[:, 0]
    if logistic:
        history.append(float(np.mean(np.logaddexp(0.0, raw) - target * raw)))
    else:
        history.append(float(0.5 * np.mean((raw - target) ** 2)))
    return base, trees_, history


def fit_gbt(X, y, task=Task.BINARY, spec=None, presorted=None) -> BoostedModel:
    """Second-order boosting: logistic loss for classes, squared loss otherwise."""
    spec = spec or EstimatorSpec("gbt")
    ps = presorted or Presorted.of(X)
    d = ps.X.shape[1]
    rng = np.random.default_rng(spec["seed"])
    if not _is_classification(task):
        booster = _boost(ps, np.asarray(y, dtype=np.float64), spec, False, rng)
        return BoostedModel(spec, None, [booster], d)
    y = np.asarray(y, dtype=np.intp)
    classes = _classes(y)
    targets = [classes[1]] if classes.size == 2 else list(classes)
    boosters = [_boost(ps, (y == c).astype(np.float64), spec, True, rng) for c in targets]
    return BoostedModel(spec, classes, boosters, d)


def fit(spec: EstimatorSpec, X, y, task=Task.BINARY, presorted=None) -> FittedModel:
    """Fit any estimator described by ``spec``."""
    task = Task(task)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise EstimatorError("cannot fit on an empty matrix")
    algo = spec.algorithm
    if algo == "ols":
        return fit_ols(X, y, task, spec)
    if algo == "elastic_net":
        return fit_elastic_net(X, y, task=task, spec=spec)
    if algo in ("logistic", "linear_svm"):
        if not task.is_classification:
            raise EstimatorError(f"{algo} needs a classification target")
        return fit_logistic(X, y, spec) if algo == "logistic" else fit_linear_svm(X, y, spec)
    if algo == "cart":
        return fit_cart(X, y, task, spec, presorted)
    if algo == "random_forest":
        return fit_random_forest(X, y, task, spec, presorted)
    return fit_gbt(X, y, task, spec, presorted)


def predict(model: FittedModel, X) -> Prediction:
    return model.predict(X)


def feature_importance(model: FittedModel) -> np.ndarray:
    return model.feature_importance()


__all__ = [
    "ALGORITHMS", "DEFAULTS", "EstimatorSpec", "EstimatorError", "SingleClassError",
    "WidthMismatchError", "NotStandardizedError", "FittedModel", "Prediction",
    "LinearRegressor", "LinearClassifier", "TreeModel", "BoostedModel", "Presorted", "Tree",
    "fit", "fit_ols", "fit_elastic_net", "fit_logistic", "fit_linear_svm", "fit_cart",
    "fit_random_forest", "fit_gbt", "predict", "feature_importance", "enet_objective",
    "lambda_max", "logistic_objective", "squared_hinge_objective",
]
