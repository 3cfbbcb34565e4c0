"""Feature selectors: filters, embedded rules, RFE, forward selection and FRAME.

FRAME shrinks the candidate set with recursive feature elimination and then
runs greedy forward selection over the surviving pool, both stages driven by
the same estimator (boosted trees by default).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Task
from .estimators import LINEAR, EstimatorError, EstimatorSpec, Presorted, fit
from .metrics import regression_metrics

METHODS = ("variance_threshold", "select_k_best", "mutual_info", "model_select", "rfe",
           "forward", "frame")
SCORE_FUNCTIONS = ("anova_f", "f_regression", "mutual_info")
MODEL_SELECT_ESTIMATORS = ("elastic_net", "random_forest", "gbt")
F_CAP = 1e12    # stand-in for an infinite F statistic
MI_BINS = 10


class SelectionError(ValueError):
    pass


class EmptySelectionError(SelectionError):
    pass


class StratificationError(SelectionError):
    pass


@dataclass(frozen=True)
class StageRecord:
    stage: str
    size: int
    score: float    # NaN for elimination rounds, which are not scored


@dataclass(frozen=True)
class SelectionResult:
    """``ranks`` follows the convention "1 = kept", larger = dropped earlier."""

    selected: tuple
    scores: np.ndarray
    ranks: np.ndarray
    stage_trace: list = field(default_factory=list)
    elapsed_seconds: float = 0.0
    method: str = ""

    @property
    def n_selected(self) -> int:
        return len(self.selected)


@dataclass(frozen=True)
class SelectorConfig:
    method: str
    k: int | None = None
    score_fn: str | None = None         # None picks by task
    threshold: float | None = None
    estimator: EstimatorSpec | None = None
    rfe_step_fraction: float = 0.1
    frame_pool: int | str = "auto"
    epsilon: float = 1e-4
    cv_folds: int = 3
    seed: int = 0
    name: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise SelectionError(f"unknown selection method {self.method!r}")
        if self.k is not None and self.k < 1:
            raise SelectionError("k must be at least 1")
        if self.method in ("select_k_best", "mutual_info", "rfe", "forward", "frame") \
                and self.k is None:
            raise SelectionError(f"{self.method} needs k")
        if self.score_fn is not None and self.score_fn not in SCORE_FUNCTIONS:
            raise SelectionError(f"unknown score function {self.score_fn!r}")
        if not 0.0 < self.rfe_step_fraction <= 1.0:
            raise SelectionError("rfe_step_fraction must lie in (0, 1]")
        if self.frame_pool != "auto":
            if not isinstance(self.frame_pool, int) or self.frame_pool < 1:
                raise SelectionError("frame_pool must be 'auto' or a positive integer")
            if self.k is not None and self.frame_pool < self.k:
                raise SelectionError(f"frame pool {self.frame_pool} is smaller than k={self.k}")
        if self.cv_folds < 2:
            raise SelectionError("cv_folds must be at least 2")
        if self.epsilon < 0 or math.isnan(self.epsilon):
            raise SelectionError("epsilon must be non-negative")
        if self.threshold is not None and self.threshold < 0 and self.method == "variance_threshold":
            raise SelectionError("variance threshold must be non-negative")
        if self.method == "model_select":
            if self.estimator is None:
                raise SelectionError("model_select needs an estimator")
            if self.estimator.algorithm not in MODEL_SELECT_ESTIMATORS:
                raise SelectionError(
                    f"model_select supports {MODEL_SELECT_ESTIMATORS}, got {self.estimator.algorithm}")

    @property
    def label(self) -> str:
        return self.name or self.method

    def engine(self) -> EstimatorSpec:
        """Estimator driving rfe/forward/frame; boosted trees unless configured."""
        return self.estimator or EstimatorSpec("gbt")

    def echo(self) -> str:
        parts = [f"method={self.method}", f"k={self.k}", f"score_fn={self.score_fn}",
                 f"threshold={self.threshold}", f"rfe_step_fraction={self.rfe_step_fraction}",
                 f"frame_pool={self.frame_pool}", f"epsilon={self.epsilon}",
                 f"cv_folds={self.cv_folds}", f"seed={self.seed}"]
        if self.estimator is not None or self.method in ("rfe", "forward", "frame"):
            parts.append(f"estimator={self.engine().echo()}")
        return ";".join(parts)


def _xy(X, y=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise SelectionError("feature matrix must be 2-D")
    if y is None:
        return X, None
    y = np.asarray(y)
    if y.shape[0] != X.shape[0]:
        raise SelectionError(f"{X.shape[0]} rows but {y.shape[0]} targets")
    return X, y


def _order_by_score(scores, idx=None):
    """Indices sorted by descending score, ties to the lowest index."""
    idx = np.arange(scores.size) if idx is None else np.asarray(idx)
    return idx[np.lexsort((idx, -scores[idx]))]


def _check_k(k, d):
    if not 1 <= k <= d:
        raise SelectionError(f"k={k} outside [1, {d}]")


def _task(task, y):
    if task is None:
        return Task.BINARY if np.unique(y).size <= 2 else Task.MULTICLASS
    return Task(task)


# -- filters ---------------------------------------------------------------

def variance_threshold(X, threshold: float = 0.0) -> SelectionResult:
    """Keep columns whose population variance exceeds ``threshold``."""
    start = time.perf_counter()
    X, _ = _xy(X)
    if threshold < 0:
        raise SelectionError("variance threshold must be non-negative")
    var = X.var(axis=0)
    keep = np.flatnonzero(var > threshold)
    if keep.size == 0:
        raise EmptySelectionError(f"no column has variance above {threshold}")
    ranks = np.where(var > threshold, 1, 2)
    return SelectionResult(tuple(int(i) for i in keep), var, ranks,
                           [StageRecord("variance_threshold", int(keep.size), float("nan"))],
                           time.perf_counter() - start, "variance_threshold")


def _capped(F):
    return np.minimum(np.nan_to_num(F, nan=0.0, posinf=F_CAP), F_CAP)


def anova_f(X, y) -> np.ndarray:
    """One-way ANOVA F statistic of every column against class codes."""
    X, y = _xy(X, y)
    classes, codes = np.unique(y, return_inverse=True)
    N, C = X.shape[0], classes.size
    if N <= C:
        raise SelectionError(f"anova needs more rows ({N}) than classes ({C})")
    if C < 2:
        raise SelectionError("anova needs at least two classes")
    counts = np.bincount(codes, minlength=C).astype(np.float64)
    sums = np.zeros((C, X.shape[1]))
    np.add.at(sums, codes, X)
    means = sums / counts[:, None]
    grand = X.mean(axis=0)
    between = (counts[:, None] * (means - grand) ** 2).sum(axis=0) / (C - 1)
    resid = X - means[codes]
    within = (resid * resid).sum(axis=0) / (N - C)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = between / within
    F = np.where(between > 0, F, 0.0)
    return _capped(F)


def f_regression(X, y) -> np.ndarray:
    """F = r²(N-2)/(1-r²) from the Pearson correlation with ``y``."""
    X, y = _xy(X, y)
    N = X.shape[0]
    if N < 3:
        raise SelectionError("f_regression needs at least 3 rows")
    Xc = X - X.mean(axis=0)
    yc = y.astype(np.float64) - y.mean()
    sx = np.sqrt((Xc * Xc).sum(axis=0))
    sy = np.sqrt(yc @ yc)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (Xc.T @ yc) / (sx * sy)
        r2 = np.minimum(r * r, 1.0)
        F = r2 * (N - 2) / (1.0 - r2)
    F = np.where((sx > 0) & (sy > 0), F, 0.0)
    return _capped(F)


def equal_frequency_bins(X, n_bins: int = MI_BINS) -> np.ndarray:
    """Per-column bin codes from empirical quantile edges; ties share a bin."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        return equal_frequency_bins(X[:, None], n_bins)[:, 0]
    q = np.arange(1, n_bins) / n_bins
    edges = np.quantile(X, q, axis=0)              # (n_bins-1, d)
    codes = np.zeros(X.shape, dtype=np.intp)
    for e in edges:
        codes += X >= e
    return codes


def mutual_info(X, y, task=None) -> np.ndarray:
    """Plug-in mutual information (nats) between binned columns and the target.

    Columns are cut into 10 equal-frequency bins; a regression target is
    binned the same way, a class target is used as is.
    """
    X, y = _xy(X, y)
    n, d = X.shape
    if task is not None and not Task(task).is_classification:
        t = equal_frequency_bins(y.astype(np.float64))
    else:
        t = np.unique(y, return_inverse=True)[1]
    T = int(t.max()) + 1
    B = equal_frequency_bins(X)
    flat = (np.arange(d) * (MI_BINS * T))[None, :] + B * T + t[:, None]
    joint = np.bincount(flat.ravel(), minlength=d * MI_BINS * T).reshape(d, MI_BINS, T) / n
    px = joint.sum(axis=2, keepdims=True)
    pt = np.bincount(t, minlength=T)[None, None, :] / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = joint * np.log(joint / (px * pt))
    mi = np.where(joint > 0, terms, 0.0).sum(axis=(1, 2))
    return np.maximum(mi, 0.0)


def univariate_scores(X, y, score_fn: str, task=None) -> np.ndarray:
    if score_fn == "anova_f":
        if task is not None and not Task(task).is_classification:
            raise SelectionError("anova_f needs a classification target")
        return anova_f(X, y)
    if score_fn == "f_regression":
        return f_regression(X, y)
    if score_fn == "mutual_info":
        return mutual_info(X, y, task)
    raise SelectionError(f"unknown score function {score_fn!r}")


def default_score_fn(task) -> str:
    return "anova_f" if Task(task).is_classification else "f_regression"


def select_k_best(X, y, k: int, score_fn: str | None = None, task=None) -> SelectionResult:
    """Top ``k`` columns by a univariate score, best first."""
    start = time.perf_counter()
    X, y = _xy(X, y)
    _check_k(k, X.shape[1])
    task = _task(task, y)
    score_fn = score_fn or default_score_fn(task)
    scores = univariate_scores(X, y, score_fn, task)
    order = _order_by_score(scores)
    ranks = np.empty(X.shape[1], dtype=np.intp)
    ranks[order] = np.arange(1, X.shape[1] + 1)
    ranks = np.maximum(ranks - k + 1, 1)
    return SelectionResult(tuple(int(i) for i in order[:k]), scores, ranks,
                           [StageRecord(score_fn, k, float("nan"))],
                           time.perf_counter() - start, "select_k_best")


# -- embedded --------------------------------------------------------------

def model_select(X, y, estimator: EstimatorSpec, task=Task.BINARY, threshold=None,
                 k: int | None = None) -> SelectionResult:
    """Keep nonzero coefficients (elastic net) or above-mean importances (trees).

    ``threshold`` overrides the rule's cutoff; ``k`` caps the count, keeping
    the highest scores.
    """
    start = time.perf_counter()
    X, y = _xy(X, y)
    algo = estimator.algorithm
    if algo not in MODEL_SELECT_ESTIMATORS:
        raise SelectionError(f"model_select supports {MODEL_SELECT_ESTIMATORS}, got {algo}")
    if algo == "elastic_net" and estimator["l1_ratio"] == 0.0:
        raise SelectionError("pure ridge (l1_ratio=0) yields no exact zeros to select on")
    model = fit(estimator, X, y, task)
    scores = np.asarray(model.feature_importance(), dtype=np.float64)
    if threshold is None:
        threshold = 0.0 if algo == "elastic_net" else float(scores.mean())
    keep = np.flatnonzero(scores > threshold)
    if keep.size == 0:
        raise EmptySelectionError(f"{algo} kept no feature above {threshold:g}")
    order = _order_by_score(scores, keep)
    if k is not None:
        order = order[:k]
    ranks = np.full(X.shape[1], 2, dtype=np.intp)
    ranks[order] = 1
    return SelectionResult(tuple(int(i) for i in order), scores, ranks,
                           [StageRecord(f"model_select:{algo}", int(order.size), float("nan"))],
                           time.perf_counter() - start, "model_select")


# -- wrappers --------------------------------------------------------------

def _fit_cols(estimator, X, y, task, cols, ps=None):
    sub = ps.subset(cols) if ps is not None else None
    return fit(estimator, X[:, cols], y, task, presorted=sub)


def rfe(X, y, estimator: EstimatorSpec, n_target: int, step_fraction: float = 0.1,
        task=Task.BINARY) -> SelectionResult:
    """Recursive feature elimination.

    Each round refits on the survivors and drops the ``max(1, floor(f * m))``
    least important of the ``m`` survivors, never going below ``n_target``.
    Equal importances drop the higher index first.
    """
    start = time.perf_counter()
    X, y = _xy(X, y)
    d = X.shape[1]
    if not 1 <= n_target <= d:
        raise SelectionError(f"rfe target {n_target} outside [1, {d}]")
    if not 0.0 < step_fraction <= 1.0:
        raise SelectionError("step_fraction must lie in (0, 1]")
    ps = None if estimator.algorithm in LINEAR else Presorted.of(X)
    alive = np.arange(d)
    eliminated_in = np.zeros(d, dtype=np.intp)   # round of elimination, 0 = survivor
    scores = np.zeros(d)
    trace = []
    rnd = 0
    while alive.size > n_target:
        rnd += 1
        model = _fit_cols(estimator, X, y, task, alive, ps)
        imp = _importance(model)
        scores[alive] = imp
        n_drop = min(max(1, int(step_fraction * alive.size)), alive.size - n_target)
        # ascending importance, ties -> higher index goes first
        worst = np.lexsort((-alive, imp))[:n_drop]
        eliminated_in[alive[worst]] = rnd
        alive = np.sort(np.delete(alive, worst))
        trace.append(StageRecord("rfe", int(alive.size), float("nan")))
    ranks = np.where(eliminated_in == 0, 1, rnd - eliminated_in + 2)
    return SelectionResult(tuple(int(i) for i in alive), scores, ranks, trace,
                           time.perf_counter() - start, "rfe")


def _importance(model):
    try:
        imp = model.feature_importance()
    except NotImplementedError as exc:
        raise SelectionError(f"{model.spec.algorithm} has no feature importances") from exc
    return np.asarray(imp, dtype=np.float64)


def cv_folds(y, n_folds: int, seed: int, stratify: bool) -> list:
    """Validation index arrays for ``n_folds``-fold CV.

    Stratified folds deal each class's shuffled rows round-robin across the
    folds, so per-fold class counts differ by at most one.
    """
    y = np.asarray(y)
    n = y.shape[0]
    if n < n_folds:
        raise SelectionError(f"{n} rows cannot fill {n_folds} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.intp)
    if stratify:
        offset = 0
        for c in np.unique(y):
            rows = rng.permutation(np.flatnonzero(y == c))
            fold_of[rows] = (offset + np.arange(rows.size)) % n_folds
            offset += rows.size
    else:
        perm = rng.permutation(n)
        fold_of[perm] = np.arange(n) % n_folds
    return [np.flatnonzero(fold_of == f) for f in range(n_folds)]


class _CrossValidator:
    """Mean held-out score of an estimator on column subsets; folds fixed once."""

    def __init__(self, X, y, estimator, task, n_folds, seed):
        self.X = X
        self.y = y
        self.task = Task(task)
        self.estimator = estimator
        clf = self.task.is_classification
        folds = cv_folds(y, n_folds, seed, clf)
        n = X.shape[0]
        self.splits = []
        for val in folds:
            train = np.setdiff1d(np.arange(n), val)
            if clf and np.unique(y[train]).size < 2:
                raise StratificationError("a cross-validation training fold holds a single class")
            if val.size == 0:
                raise SelectionError("empty cross-validation fold")
            ps = None if estimator.algorithm in LINEAR else Presorted.of(X[train])
            self.splits.append((train, val, ps))

    def score(self, cols) -> float:
        cols = np.asarray(cols, dtype=np.intp)
        total = 0.0
        for train, val, ps in self.splits:
            Xtr = self.X[np.ix_(train, cols)]
            Xva = self.X[np.ix_(val, cols)]
            if self.estimator.algorithm in LINEAR:
                # refit scaling on the fold so penalized solvers see standardized columns
                mu = Xtr.mean(axis=0)
                sd = Xtr.std(axis=0)
                sd[sd == 0] = 1.0
                Xtr = (Xtr - mu) / sd
                Xva = (Xva - mu) / sd
            sub = ps.subset(cols) if ps is not None else None
            model = fit(self.estimator, Xtr, self.y[train], self.task, presorted=sub)
            pred = model.predict(Xva).values
            if self.task.is_classification:
                total += float(np.mean(pred == self.y[val]))
            else:
                total += regression_metrics(self.y[val], pred).r2
        return total / len(self.splits)


def forward_select(X, y, estimator: EstimatorSpec, k_max: int, epsilon: float = 1e-4,
                   n_folds: int = 3, task=Task.BINARY, seed: int = 0, candidates=None,
                   n_jobs: int = 1) -> SelectionResult:
    """Greedy forward selection scored by mean cross-validated accuracy or R².

    The first feature is always added. Afterwards a round's best candidate is
    added only if it beats the current score by at least ``epsilon``. Equal
    scores go to the lowest column index.
    """
    start = time.perf_counter()
    X, y = _xy(X, y)
    d = X.shape[1]
    if k_max < 1:
        raise SelectionError("k_max must be at least 1")
    pool = np.arange(d) if candidates is None else np.sort(np.asarray(candidates, dtype=np.intp))
    if pool.size == 0 or pool.min() < 0 or pool.max() >= d or np.unique(pool).size != pool.size:
        raise SelectionError("candidate indices must be unique and within bounds")
    task = Task(task)
    y = y.astype(np.intp if task.is_classification else np.float64)
    cv = _CrossValidator(X, y, estimator, task, n_folds, seed)
    chosen: list[int] = []
    scores = np.full(d, np.nan)
    current = -np.inf
    trace = []
    pool_executor = ThreadPoolExecutor(n_jobs) if n_jobs > 1 else None
    try:
        while len(chosen) < min(k_max, pool.size):
            remaining = [int(j) for j in pool if j not in chosen]
            subsets = [chosen + [j] for j in remaining]
            if pool_executor is None:
                vals = [cv.score(s) for s in subsets]
            else:
                vals = list(pool_executor.map(cv.score, subsets))
            vals = np.asarray(vals)
            best = int(np.argmax(vals))     # remaining is ascending: ties -> lowest index
            if chosen and vals[best] - current < epsilon:
                break
            j = remaining[best]
            chosen.append(j)
            scores[j] = vals[best]
            current = float(vals[best])
            trace.append(StageRecord("forward", len(chosen), current))
    finally:
        if pool_executor is not None:
            pool_executor.shutdown()
    ranks = np.full(d, len(chosen) + 1, dtype=np.intp)
    ranks[chosen] = np.arange(1, len(chosen) + 1)
    return SelectionResult(tuple(chosen), scores, ranks, trace,
                           time.perf_counter() - start, "forward")


def default_pool(k: int, d: int) -> int:
    return min(d, max(2 * k, k + 10))


def frame(X, y, config: SelectorConfig, task=Task.BINARY, n_jobs: int = 1) -> SelectionResult:
    """RFE down to a candidate pool, then forward selection inside the pool."""
    start = time.perf_counter()
    X, y = _xy(X, y)
    d = X.shape[1]
    k = config.k
    if k is None or k < 1:
        raise SelectionError("frame needs k >= 1")
    _check_k(k, d)
    pool = default_pool(k, d) if config.frame_pool == "auto" else min(int(config.frame_pool), d)
    if pool < k:
        raise SelectionError(f"frame pool {pool} is smaller than k={k}")
    estimator = config.engine().with_seed(config.seed)
    trace = []
    if pool < d:
        stage1 = rfe(X, y, estimator, pool, config.rfe_step_fraction, task)
        trace.extend(stage1.stage_trace)
        candidates = np.asarray(stage1.selected)
        base_ranks = stage1.ranks
    else:
        candidates = np.arange(d)
        base_ranks = np.ones(d, dtype=np.intp)
    stage2 = forward_select(X, y, estimator, k, config.epsilon, config.cv_folds, task,
                            config.seed, candidates, n_jobs)
    trace.extend(stage2.stage_trace)
    m = stage2.n_selected
    ranks = np.where(base_ranks == 1, m + 1, base_ranks + m)
    ranks[list(stage2.selected)] = np.arange(1, m + 1)
    return SelectionResult(stage2.selected, stage2.scores, ranks, trace,
                           time.perf_counter() - start, "frame")


def run_selector(config: SelectorConfig, X, y, task, n_jobs: int = 1) -> SelectionResult:
    """Dispatch a configured selector on a (preprocessed) training matrix."""
    task = Task(task)
    d = np.asarray(X).shape[1]
    if config.k is not None and config.method != "model_select":
        _check_k(config.k, d)
    m = config.method
    if m == "variance_threshold":
        return variance_threshold(X, config.threshold or 0.0)
    if m == "select_k_best":
        return select_k_best(X, y, config.k, config.score_fn or default_score_fn(task), task)
    if m == "mutual_info":
        res = select_k_best(X, y, config.k, "mutual_info", task)
        return SelectionResult(res.selected, res.scores, res.ranks, res.stage_trace,
                               res.elapsed_seconds, "mutual_info")
    if m == "model_select":
        return model_select(X, y, config.estimator.with_seed(config.seed), task,
                            config.threshold, config.k)
    estimator = config.engine().with_seed(config.seed)
    if m == "rfe":
        return rfe(X, y, estimator, config.k, config.rfe_step_fraction, task)
    if m == "forward":
        return forward_select(X, y, estimator, config.k, config.epsilon, config.cv_folds,
                              task, config.seed, n_jobs=n_jobs)
    return frame(X, y, config, task, n_jobs)


__all__ = [
    "METHODS", "SCORE_FUNCTIONS", "SelectorConfig", "SelectionResult", "StageRecord",
    "SelectionError", "EmptySelectionError", "StratificationError", "variance_threshold",
    "univariate_scores", "anova_f", "f_regression", "mutual_info", "select_k_best",
    "model_select", "rfe", "forward_select", "frame", "run_selector", "cv_folds",
    "default_pool", "EstimatorError",
]
