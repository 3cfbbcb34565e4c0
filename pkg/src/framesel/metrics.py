"""Regression and classification metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

MAPE_GUARD = 1e-8


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class RegressionReport:
    r2: float
    mse: float
    rmse: float
    mae: float
    msle: float | None      # None when some value is <= -1
    mape_percent: float

    primary_name = "r2"

    @property
    def primary(self) -> float:
        return self.r2

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc_roc: float | None   # None when no scores were given

    primary_name = "accuracy"

    @property
    def primary(self) -> float:
        return self.accuracy

    def as_dict(self) -> dict:
        return asdict(self)


def _pair(y_true, y_pred, dtype):
    t = np.asarray(y_true, dtype=dtype).ravel()
    p = np.asarray(y_pred, dtype=dtype).ravel()
    if t.size != p.size:
        raise MetricError(f"length mismatch: {t.size} targets vs {p.size} predictions")
    return t, p


def regression_metrics(y_true, y_pred) -> RegressionReport:
    t, p = _pair(y_true, y_pred, np.float64)
    if t.size < 2:
        raise MetricError("regression metrics need at least 2 values")
    err = t - p
    mse = float(np.mean(err * err))
    ss_res = float(err @ err)
    dev = t - t.mean()
    ss_tot = float(dev @ dev)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    msle = None
    if (t > -1).all() and (p > -1).all():
        d = np.log1p(t) - np.log1p(p)
        msle = float(np.mean(d * d))
    mape = float(100.0 * np.mean(np.abs(err) / np.maximum(np.abs(t), MAPE_GUARD)))
    return RegressionReport(r2, mse, float(np.sqrt(mse)), float(np.mean(np.abs(err))),
                            msle, mape)


def confusion_matrix(y_true, y_pred, n_classes: int | None = None) -> np.ndarray:
    """Rows are true classes, columns predicted. Predicted codes outside the
    true-class range land in an extra column so they count as errors."""
    t, p = _pair(y_true, y_pred, np.int64)
    C = int(n_classes if n_classes is not None else t.max(initial=-1) + 1)
    p = np.where((p >= 0) & (p < C), p, C)
    cm = np.zeros((C, C + 1), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def classification_metrics(y_true, y_pred, scores=None,
                           n_classes: int | None = None) -> ClassificationReport:
    t, p = _pair(y_true, y_pred, np.int64)
    if t.size == 0:
        raise MetricError("no samples")
    C = int(n_classes if n_classes is not None else max(t.max(), p.max(initial=0)) + 1)
    cm = confusion_matrix(t, p, C)
    tp = np.diag(cm[:, :C]).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)
    predicted = cm[:, :C].sum(axis=0).astype(np.float64)
    prec = np.divide(tp, predicted, out=np.zeros(C), where=predicted > 0)
    rec = np.divide(tp, support, out=np.zeros(C), where=support > 0)
    denom = prec + rec
    f1 = np.divide(2 * prec * rec, denom, out=np.zeros(C), where=denom > 0)
    w = support / support.sum()
    auc = None
    # a single-class sample has no ROC curve; report the AUC as absent
    if scores is not None and np.unique(t).size > 1:
        auc = auc_roc(t, scores) if C <= 2 else multiclass_auc(t, scores, C)
    return ClassificationReport(float(tp.sum() / t.size), float(w @ prec), float(w @ rec),
                                float(w @ f1), auc)


def _midranks(s) -> np.ndarray:
    """1-based ranks with ties replaced by their average rank."""
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], s.size]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(s.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def auc_roc(y_true, scores) -> float:
    """Area under the ROC curve from the Mann-Whitney rank sum with midranks."""
    y = np.asarray(y_true).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if y.size != s.size:
        raise MetricError(f"length mismatch: {y.size} labels vs {s.size} scores")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("auc needs both classes present")
    r_pos = _midranks(s)[pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def multiclass_auc(y_true, scores, n_classes: int | None = None) -> float:
    """Unweighted mean of one-vs-rest AUCs over classes present in ``y_true``."""
    y = np.asarray(y_true, dtype=np.int64).ravel()
    S = np.asarray(scores, dtype=np.float64)
    C = int(n_classes or S.shape[1])
    aucs = []
    for c in range(C):
        hit = y == c
        if hit.all() or not hit.any():
            continue
        aucs.append(auc_roc(hit.astype(int), S[:, c]))
    if not aucs:
        raise MetricError("auc needs at least two classes present")
    return float(np.mean(aucs))


def evaluate(task, y_true, prediction, n_classes: int | None = None, classes=None):
    """Report for a ``Prediction`` under the given task.

    ``classes`` lists the codes the model was trained on; multiclass scores
    are spread into an ``(n, n_classes)`` matrix so column ``c`` is code ``c``.
    """
    if not task.is_classification:
        return regression_metrics(y_true, prediction.values)
    scores = np.asarray(prediction.scores, dtype=np.float64)
    C = int(n_classes or 2)
    if C > 2 and classes is not None:
        classes = np.asarray(classes)
        full = np.zeros((scores.shape[0], C))
        if scores.ndim == 1:
            full[:, classes[1]] = scores
            full[:, classes[0]] = -scores
        else:
            full[:, classes] = scores
        scores = full
    return classification_metrics(y_true, prediction.values, scores, C)
