"""Dataset characteristics: class balance, correlation, variance, skew, outliers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .preprocess import fit_transform

OUTLIER_THRESHOLD = 0.6
EXACT_CORRELATION_MAX_D = 500
SAMPLED_PAIRS = 100_000


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    instances: int
    class_distribution: dict[int, float] | None
    max_feature_correlation: float | None
    avg_variance: float
    target_skewness: float
    outlier_fraction: float
    dimensionality_ratio: float

    COLUMNS = ("Dataset Type", "Instances", "Class Distribution (%)",
               "Max Feature Correlation", "Avg Variance", "Skewness of Target",
               "Outliers (%)", "Dimensionality Ratio")

    def row(self) -> list[str]:
        if self.class_distribution is None:
            dist = "n/a (regression)"
        else:
            items = sorted(self.class_distribution.items(), key=lambda kv: (-kv[1], kv[0]))
            dist = ", ".join(f"{c}: {p:.1f}" for c, p in items)
        corr = "n/a" if self.max_feature_correlation is None else f"{self.max_feature_correlation:.3f}"
        return [self.name, str(self.instances), dist, corr, f"{self.avg_variance:.2f}",
                f"{self.target_skewness:.3f}", f"{100 * self.outlier_fraction:.1f}",
                f"{self.dimensionality_ratio:.3f}"]

    def markdown(self, header: bool = True) -> str:
        lines = []
        if header:
            lines.append("| " + " | ".join(self.COLUMNS) + " |")
            lines.append("|" + "---|" * len(self.COLUMNS))
        lines.append("| " + " | ".join(self.row()) + " |")
        return "\n".join(lines)


def skewness(v) -> float:
    """Biased sample skewness m3 / m2**1.5 (0 for constant input)."""
    v = np.asarray(v, dtype=np.float64)
    if v.size < 2:
        raise ProfileError("skewness needs at least 2 values")
    dev = v - v.mean()
    m2 = np.mean(dev ** 2)
    if m2 == 0:
        return 0.0
    return float(np.mean(dev ** 3) / m2 ** 1.5)


def max_abs_correlation(X, seed: int = 0, exact: bool | None = None) -> float:
    """Largest |Pearson r| between distinct non-constant columns.

    Exhaustive up to 500 usable columns (or when ``exact``); beyond that a
    seeded sample of 100000 column pairs is scanned.
    """
    X = np.asarray(X, dtype=np.float64)
    sd = X.std(axis=0)
    Z = X[:, sd > 0]
    d = Z.shape[1]
    if d < 2:
        raise ProfileError(f"need at least 2 non-constant columns, found {d}")
    Z = (Z - Z.mean(axis=0)) / Z.std(axis=0)
    n = Z.shape[0]
    if exact or (exact is None and d <= EXACT_CORRELATION_MAX_D):
        C = (Z.T @ Z) / n
        np.fill_diagonal(C, 0.0)
        return float(min(np.abs(C).max(), 1.0))
    rng = np.random.default_rng(seed)
    i = rng.integers(0, d, size=SAMPLED_PAIRS)
    j = (i + rng.integers(1, d, size=SAMPLED_PAIRS)) % d
    best = 0.0
    for s in range(0, SAMPLED_PAIRS, 5000):
        a, b = i[s:s + 5000], j[s:s + 5000]
        r = np.einsum("ij,ij->j", Z[:, a], Z[:, b]) / n
        best = max(best, float(np.abs(r).max()))
    return min(best, 1.0)


def _harmonic(k: int) -> float:
    return math.fsum(1.0 / i for i in range(1, k + 1))


def average_path_length(size: int) -> float:
    """Expected unsuccessful-search path length in a BST of ``size`` nodes."""
    if size <= 1:
        return 0.0
    return 2.0 * _harmonic(size - 1) - 2.0 * (size - 1) / size


def _build_itree(X, rng, height_limit):
    feature, threshold, left, right, leaf_size = [], [], [], [], []

    def grow(rows, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_size.append(rows.size)
        if depth >= height_limit or rows.size <= 1:
            return node
        sub = X[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        candidates = np.flatnonzero(hi > lo)
        if candidates.size == 0:
            return node
        q = int(candidates[rng.integers(candidates.size)])
        p = rng.uniform(lo[q], hi[q])
        goes_left = sub[:, q] < p
        feature[node] = q
        threshold[node] = p
        left[node] = grow(rows[goes_left], depth + 1)
        right[node] = grow(rows[~goes_left], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return (np.array(feature), np.array(threshold), np.array(left), np.array(right),
            np.array(leaf_size))


def _path_lengths(X, tree):
    feature, threshold, left, right, leaf_size = tree
    node = np.zeros(X.shape[0], dtype=np.intp)
    depth = np.zeros(X.shape[0])
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] < threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        depth[r] += 1
        active = feature[node] >= 0
    extra = np.array([average_path_length(int(s)) for s in leaf_size])
    return depth + extra[node]


def isolation_forest_scores(X, n_trees: int = 100, subsample: int | None = None,
                            seed: int = 0) -> np.ndarray:
    """Anomaly scores ``2 ** (-E[h(x)] / c(psi))`` for every row of ``X``.

    Each tree uses its own generator seeded from ``(seed, tree_index)``.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 8:
        raise ProfileError(f"isolation forest needs at least 8 rows, got {n}")
    psi = min(256, n) if subsample is None else min(subsample, n)
    limit = math.ceil(math.log2(psi))
    total = np.zeros(n)
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        rows = rng.choice(n, size=psi, replace=False)
        tree = _build_itree(X[rows], rng, limit)
        total += _path_lengths(X, tree)
    return 2.0 ** (-(total / n_trees) / average_path_length(psi))


def isolation_forest_outliers(X, n_trees: int = 100, subsample: int | None = None,
                              seed: int = 0):
    scores = isolation_forest_scores(X, n_trees, subsample, seed)
    return scores, float(np.mean(scores > OUTLIER_THRESHOLD))


def profile_dataset(data: Dataset, seed: int = 0, exact_correlation: bool | None = None
                    ) -> DatasetProfile:
    """Summary statistics of ``data`` after encoding and imputation (no scaling)."""
    clean, _ = fit_transform(data, scale=False)
    X = clean.features
    dist = None
    if data.task.is_classification:
        counts = np.bincount(data.target, minlength=data.n_classes)
        dist = {int(c): 100.0 * counts[c] / data.n_samples for c in np.flatnonzero(counts)}
    try:
        corr = max_abs_correlation(X, seed=seed, exact=exact_correlation)
    except ProfileError:
        corr = None
    _, frac = isolation_forest_outliers(X, seed=seed)
    return DatasetProfile(
        name=data.name,
        instances=data.n_samples,
        class_distribution=dist,
        max_feature_correlation=corr,
        avg_variance=float(X.var(axis=0).mean()),
        target_skewness=skewness(data.target),
        outlier_fraction=frac,
        dimensionality_ratio=data.n_features / data.n_samples,
    )
