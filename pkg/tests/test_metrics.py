import numpy as np
import pytest

from framesel.data import Task
from framesel.estimators import Prediction
from framesel.metrics import (MetricError, auc_roc, classification_metrics, confusion_matrix,
                              evaluate, multiclass_auc, regression_metrics)


def pair_auc(y, s):
    pos = s[y == 1]
    neg = s[y == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    return wins / (pos.size * neg.size)


def test_regression_perfect_and_baseline(rng):
    y = rng.normal(size=20)
    r = regression_metrics(y, y)
    assert r.r2 == 1.0 and r.mse == r.rmse == r.mae == 0.0
    assert regression_metrics(y, np.full(20, y.mean())).r2 == pytest.approx(0.0, abs=1e-12)


def test_regression_fields(rng):
    y = rng.uniform(1, 5, size=30)
    p = y + rng.normal(size=30)
    r = regression_metrics(y, p)
    assert r.rmse == pytest.approx(np.sqrt(r.mse), abs=1e-12)
    assert r.mape_percent == pytest.approx(100 * np.mean(np.abs(y - p) / y))
    assert regression_metrics(y, np.full(30, -2.0)).msle is None


def test_regression_translation(rng):
    y, p = rng.normal(size=25), rng.normal(size=25)
    a, b = regression_metrics(y, p), regression_metrics(y + 7.5, p + 7.5)
    for f in ("mse", "rmse", "mae"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-12)


def test_mape_guard():
    r = regression_metrics([0.0, 1.0], [1.0, 1.0])
    assert np.isfinite(r.mape_percent) and r.mape_percent > 1e9


def test_classification_perfect():
    y = np.array([0, 1, 1, 0, 2])
    r = classification_metrics(y, y)
    assert (r.accuracy, r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0, 1.0)


def test_weighted_recall_equals_accuracy(rng):
    for _ in range(50):
        C = int(rng.integers(2, 5))
        y = rng.integers(0, C, size=40)
        p = rng.integers(0, C, size=40)
        r = classification_metrics(y, p, n_classes=C)
        assert r.recall == pytest.approx(r.accuracy, abs=1e-12)
        assert all(0 <= v <= 1 for v in (r.precision, r.recall, r.f1))


def test_confusion_matrix_unseen_prediction():
    cm = confusion_matrix([0, 1, 1], [0, 1, 5], n_classes=2)
    assert cm.tolist() == [[1, 0, 0], [0, 1, 1]]


def test_auc_simple_cases():
    assert auc_roc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
    assert auc_roc([0, 1, 0, 1], [0.5] * 4) == 0.5
    y = np.array([0, 0, 1, 0, 1, 1])
    s = np.array([0.1, 0.3, 0.2, 0.4, 0.6, 0.7])
    assert auc_roc(y, s) == pytest.approx(pair_auc(y, s), abs=1e-12)
    with pytest.raises(MetricError):
        auc_roc([1, 1], [0.2, 0.3])


def test_auc_symmetries(rng):
    y = np.r_[np.zeros(20), np.ones(15)].astype(int)
    s = np.round(rng.normal(size=35), 1)
    assert auc_roc(y, -s) == pytest.approx(1 - auc_roc(y, s), abs=1e-12)
    assert auc_roc(y, np.exp(3 * s)) == pytest.approx(auc_roc(y, s), abs=1e-12)


def test_multiclass_auc(rng):
    y = np.repeat([0, 1, 2], 10)
    S = np.eye(3)[y] + 0.01 * rng.random((30, 3))
    assert multiclass_auc(y, S) == 1.0


def test_single_class_sample_reports_no_auc():
    r = classification_metrics([1, 1, 1], [1, 0, 1], scores=[0.9, 0.2, 0.7], n_classes=2)
    assert r.auc_roc is None


def test_evaluate_multiclass_expands_scores():
    pred = Prediction(np.array([0, 2, 2]), np.array([[0.8, 0.2], [0.1, 0.9], [0.3, 0.7]]))
    r = evaluate(Task.MULTICLASS, np.array([0, 2, 1]), pred, n_classes=3, classes=np.array([0, 2]))
    assert r.accuracy == pytest.approx(2 / 3)
    assert r.auc_roc is not None
