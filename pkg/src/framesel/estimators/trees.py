"""CART, random forest and second-order gradient boosting.

Trees are grown level by level. Each level is one call into a split-search
kernel that scans every feature once in presorted order and returns the best
boundary for every open node, so one fit sorts the data exactly once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from .._kernels._growth import Grower as _Grower

GINI_MIN_GAIN = 1e-9


@dataclass(frozen=True)
class Presorted:
    """Transposed feature matrix and its per-feature stable argsort."""

    X: np.ndarray
    Xt: np.ndarray
    order: np.ndarray

    @classmethod
    def of(cls, X) -> "Presorted":
        X = np.ascontiguousarray(X, dtype=np.float64)
        Xt = np.ascontiguousarray(X.T)
        order = np.ascontiguousarray(np.argsort(Xt, axis=1, kind="stable").astype(np.intp))
        return cls(X, Xt, order)

    def subset(self, cols) -> "Presorted":
        """Column subset; per-feature sort orders are reused as is."""
        cols = np.asarray(cols, dtype=np.intp)
        return Presorted(np.ascontiguousarray(self.X[:, cols]), self.Xt[cols], self.order[cols])


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray     # -1 marks a leaf
    threshold: np.ndarray   # go left when x <= threshold
    left: np.ndarray
    right: np.ndarray
    gain: np.ndarray        # split gain (0 at leaves)
    value: np.ndarray       # (n_nodes, k) leaf payload

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.flatnonzero(self.feature[node] >= 0)
        while rows.size:
            nd = node[rows]
            go_left = X[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            rows = rows[self.feature[node[rows]] >= 0]
        return node

    def predict_value(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def importance(self, n_features: int) -> np.ndarray:
        imp = np.zeros(n_features)
        split = self.feature >= 0
        np.add.at(imp, self.feature[split], self.gain[split])
        return imp


def stack_trees(trees) -> tuple:
    """Pad node arrays of several trees into 2-D arrays for joint traversal."""
    cap = max(t.n_nodes for t in trees)
    T = len(trees)
    feature = np.full((T, cap), -1, dtype=np.intp)
    threshold = np.zeros((T, cap))
    left = np.full((T, cap), -1, dtype=np.intp)
    right = np.full((T, cap), -1, dtype=np.intp)
    value = np.zeros((T, cap))
    for i, t in enumerate(trees):
        m = t.n_nodes
        feature[i, :m], threshold[i, :m] = t.feature, t.threshold
        left[i, :m], right[i, :m], value[i, :m] = t.left, t.right, t.value[:, 0]
    return feature, threshold, left, right, value


def grow_classification_tree(ps: Presorted, y, n_classes: int, weight=None,
                             max_depth: int = 10, min_leaf: int = 2, mtry: int | None = None,
                             rng: np.random.Generator | None = None) -> Tree:
    """Gini tree on integer codes ``y``; ``weight`` holds bootstrap multiplicities.

    Leaves store class frequencies. Ties between equally good splits go to
    the lowest feature index, then the lowest threshold.
    """
    n, d = ps.X.shape
    y = np.asarray(y, dtype=np.intp)
    weight = np.ones(n, dtype=np.int64) if weight is None else np.asarray(weight, dtype=np.int64)
    g = _Grower(n, max_depth, weight > 0)
    C = n_classes
    for _ in range(max_depth):
        node_of = g.slots()
        ok = node_of >= 0
        K = g.width
        counts = np.bincount(node_of[ok] * C + y[ok], weights=weight[ok],
                             minlength=K * C).astype(np.int64).reshape(K, C)
        total = counts.sum(axis=1)
        splittable = (total >= 2 * min_leaf) & ((counts > 0).sum(axis=1) > 1)
        if not splittable.any():
            break
        node_of[ok] = np.where(splittable[node_of[ok]], node_of[ok], -1)
        fmask = _feature_mask(K, d, mtry, rng, splittable)
        feat, lo, hi, gain = _kernels.cart_level_split_gini(
            ps.Xt, ps.order, node_of, weight, y, counts, fmask, min_leaf)
        do_split = splittable & (feat >= 0) & (gain > GINI_MIN_GAIN)
        if not do_split.any():
            break
        g.split(ps.X, node_of, do_split, feat, lo, hi, gain)
    ok = g.assign >= 0
    counts = np.bincount(g.assign[ok] * C + y[ok], weights=weight[ok],
                         minlength=g.next_id * C).reshape(g.next_id, C)
    tot = counts.sum(axis=1, keepdims=True)
    value = np.divide(counts, tot, out=np.zeros_like(counts), where=tot > 0)
    return Tree(*g.finish(value))


def grow_regression_tree(ps: Presorted, y, weight=None, max_depth: int = 10,
                         min_leaf: int = 2, mtry: int | None = None,
                         rng: np.random.Generator | None = None) -> Tree:
    """Variance-reduction tree; leaves store the (weighted) mean target."""
    n, d = ps.X.shape
    y = np.asarray(y, dtype=np.float64)
    weight = np.ones(n, dtype=np.int64) if weight is None else np.asarray(weight, dtype=np.int64)
    wy = weight * y
    g = _Grower(n, max_depth, weight > 0)
    for _ in range(max_depth):
        node_of = g.slots()
        ok = node_of >= 0
        K = g.width
        N = np.bincount(node_of[ok], weights=weight[ok], minlength=K).astype(np.int64)
        S = np.bincount(node_of[ok], weights=wy[ok], minlength=K)
        SS = np.bincount(node_of[ok], weights=(wy * y)[ok], minlength=K)
        with np.errstate(divide="ignore", invalid="ignore"):
            sse = SS - np.where(N > 0, S * S / N, 0.0)
        scale = np.maximum(np.abs(SS), 1.0)
        splittable = (N >= 2 * min_leaf) & (sse > 1e-12 * scale)
        if not splittable.any():
            break
        node_of[ok] = np.where(splittable[node_of[ok]], node_of[ok], -1)
        fmask = _feature_mask(K, d, mtry, rng, splittable)
        feat, lo, hi, gain = _kernels.cart_level_split_mse(
            ps.Xt, ps.order, node_of, weight, wy, S, N, fmask, min_leaf)
        do_split = splittable & (feat >= 0) & (gain > 1e-12 * scale)
        if not do_split.any():
            break
        g.split(ps.X, node_of, do_split, feat, lo, hi, gain)
    ok = g.assign >= 0
    N = np.bincount(g.assign[ok], weights=weight[ok], minlength=g.next_id)
    S = np.bincount(g.assign[ok], weights=wy[ok], minlength=g.next_id)
    value = np.divide(S, N, out=np.zeros_like(S), where=N > 0)[:, None]
    return Tree(*g.finish(value))


def _feature_mask(K, d, mtry, rng, splittable):
    if mtry is None or mtry >= d:
        return np.ones((K, d), dtype=np.uint8)
    fmask = np.zeros((K, d), dtype=np.uint8)
    for k in np.flatnonzero(splittable):
        fmask[k, rng.choice(d, size=mtry, replace=False)] = 1
    return fmask


def grow_boosting_tree(ps: Presorted, grad, hess, max_depth: int = 3,
                       reg_lambda: float = 1.0, gamma: float = 0.0,
                       min_child_weight: float = 1.0, active=None):
    """One second-order boosting tree.

    Split gain is ``0.5 * (GL²/(HL+λ) + GR²/(HR+λ) - G²/(H+λ)) - γ`` and leaf
    weights are ``-G/(H+λ)``. Returns the tree and the leaf of every
    training row (``-1`` for rows outside ``active``).
    """
    n = ps.X.shape[0]
    active = np.ones(n, dtype=np.uint8) if active is None else np.asarray(active, dtype=np.uint8)
    *parts, assign = _kernels.gbt_grow_tree(
        ps.X, ps.Xt, ps.order, np.ascontiguousarray(grad, dtype=np.float64),
        np.ascontiguousarray(hess, dtype=np.float64), active, int(max_depth),
        float(reg_lambda), float(gamma), float(min_child_weight))
    return Tree(*parts), assign


def default_mtry(d: int, classification: bool) -> int:
    return max(1, math.ceil(math.sqrt(d)) if classification else math.ceil(d / 3))
