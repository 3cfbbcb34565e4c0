"""Pure numpy versions of the compiled kernels.

Tree kernels evaluate the same candidate boundaries in the same order and
with the same floating-point expressions as ``_ckernels``, so the chosen
splits match bit for bit. The coordinate-descent loop agrees to rounding
(BLAS dot products sum in a different order).
"""

import numpy as np

from ._growth import Grower


def _node_rows(order, node_of, k, feats=None):
    """Row indices of node ``k`` in per-feature sorted order, shape (f, m)."""
    sub = order if feats is None else order[feats]
    sel = node_of[sub] == k
    m = int(sel[0].sum()) if sel.shape[0] else 0
    return sub[sel].reshape(sub.shape[0], m)


def _pick(gains, v):
    flat = int(np.argmax(gains))
    j, pos = divmod(flat, gains.shape[1])
    return j, v[j, pos], v[j, pos + 1], gains[j, pos]


def gbt_level_split(Xt, order, node_of, grad, hess, G, H, reg_lambda, gamma,
                    min_child_weight):
    K = len(G)
    feat = np.full(K, -1, dtype=np.intp)
    lo = np.zeros(K)
    hi = np.zeros(K)
    best = np.full(K, -np.inf)
    for k in range(K):
        idx = _node_rows(order, node_of, k)
        if idx.shape[1] < 2:
            continue
        v = np.take_along_axis(Xt, idx, axis=1)
        gl = np.cumsum(grad[idx], axis=1)[:, :-1]
        hl = np.cumsum(hess[idx], axis=1)[:, :-1]
        gr = G[k] - gl
        hr = H[k] - hl
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
                          - G[k] * G[k] / (H[k] + reg_lambda)) - gamma
        ok = (v[:, 1:] != v[:, :-1]) & (hl >= min_child_weight) & (hr >= min_child_weight)
        gain = np.where(ok, gain, -np.inf)
        j, a, b, g = _pick(gain, v)
        if g > -np.inf:
            feat[k], lo[k], hi[k], best[k] = j, a, b, g
    return feat, lo, hi, best


def gbt_grow_tree(X, Xt, order, grad, hess, active, max_depth, reg_lambda, gamma,
                  min_child_weight):
    """Grow one boosting tree level by level; returns node arrays plus row leaves."""
    g = Grower(X.shape[0], max_depth, active.astype(bool))
    for _ in range(max_depth):
        node_of = g.slots()
        ok = node_of >= 0
        K = g.width
        G = np.bincount(node_of[ok], weights=grad[ok], minlength=K)
        H = np.bincount(node_of[ok], weights=hess[ok], minlength=K)
        cnt = np.bincount(node_of[ok], minlength=K)
        splittable = (cnt >= 2) & (H >= 2 * min_child_weight)
        if not splittable.any():
            break
        node_of[ok] = np.where(splittable[node_of[ok]], node_of[ok], -1)
        feat, lo, hi, gain = gbt_level_split(Xt, order, node_of, grad, hess, G, H,
                                             reg_lambda, gamma, min_child_weight)
        do_split = splittable & (feat >= 0) & (gain > 0)
        if not do_split.any():
            break
        g.split(X, node_of, do_split, feat, lo, hi, gain)
    ok = g.assign >= 0
    G = np.bincount(g.assign[ok], weights=grad[ok], minlength=g.next_id)
    H = np.bincount(g.assign[ok], weights=hess[ok], minlength=g.next_id)
    value = (-G / (H + reg_lambda))[:, None]
    return (*g.finish(value), g.assign)


def cart_level_split_gini(Xt, order, node_of, weight, y, counts, fmask, min_leaf):
    K, C = counts.shape
    feat = np.full(K, -1, dtype=np.intp)
    lo = np.zeros(K)
    hi = np.zeros(K)
    best = np.full(K, -np.inf)
    classes = np.arange(C)
    for k in range(K):
        feats = np.flatnonzero(fmask[k])
        if feats.size == 0:
            continue
        idx = _node_rows(order, node_of, k, feats)
        if idx.shape[1] < 2:
            continue
        v = np.take_along_axis(Xt[feats], idx, axis=1)
        w = weight[idx]
        onehot = (y[idx][..., None] == classes) * w[..., None]
        left = np.cumsum(onehot, axis=1)[:, :-1, :]
        right = counts[k] - left
        nl = np.cumsum(w, axis=1)[:, :-1]
        total = counts[k].sum()
        nr = total - nl
        sq_l = (left * left).sum(axis=2)
        sq_r = (right * right).sum(axis=2)
        sq_t = int((counts[k] * counts[k]).sum())
        ok = (v[:, 1:] != v[:, :-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = (sq_l.astype(np.float64) / nl.astype(np.float64)
                    + sq_r.astype(np.float64) / nr.astype(np.float64)
                    - float(sq_t) / float(total))
        gain = np.where(ok, gain, -np.inf)
        j, a, b, g = _pick(gain, v)
        if g > -np.inf:
            feat[k], lo[k], hi[k], best[k] = feats[j], a, b, g
    return feat, lo, hi, best


def cart_level_split_mse(Xt, order, node_of, weight, wy, S, N, fmask, min_leaf):
    K = len(S)
    feat = np.full(K, -1, dtype=np.intp)
    lo = np.zeros(K)
    hi = np.zeros(K)
    best = np.full(K, -np.inf)
    for k in range(K):
        feats = np.flatnonzero(fmask[k])
        if feats.size == 0:
            continue
        idx = _node_rows(order, node_of, k, feats)
        if idx.shape[1] < 2:
            continue
        v = np.take_along_axis(Xt[feats], idx, axis=1)
        sl = np.cumsum(wy[idx], axis=1)[:, :-1]
        nl = np.cumsum(weight[idx], axis=1)[:, :-1]
        sr = S[k] - sl
        nr = N[k] - nl
        ok = (v[:, 1:] != v[:, :-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = (sl * sl / nl.astype(np.float64) + sr * sr / nr.astype(np.float64)
                    - S[k] * S[k] / float(N[k]))
        gain = np.where(ok, gain, -np.inf)
        j, a, b, g = _pick(gain, v)
        if g > -np.inf:
            feat[k], lo[k], hi[k], best[k] = feats[j], a, b, g
    return feat, lo, hi, best


def enet_cd(X, resid, beta, lam, l1_ratio, max_sweeps, tol):
    """Cyclic coordinate descent; ``resid`` is y - mean(y) - X @ beta on entry."""
    n, d = X.shape
    r = np.array(resid, dtype=np.float64)
    l1 = lam * l1_ratio
    l2 = lam * (1.0 - l1_ratio)
    z = np.einsum("ij,ij->j", X, X)
    sweep = 0
    while sweep < max_sweeps:
        sweep += 1
        max_delta = 0.0
        for j in range(d):
            old = beta[j]
            xj = X[:, j]
            thr = (xj @ r + z[j] * old) / n
            denom = z[j] / n + l2
            if thr > l1 and denom > 0:
                new = (thr - l1) / denom
            elif thr < -l1 and denom > 0:
                new = (thr + l1) / denom
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                r -= xj * delta
                beta[j] = new
            max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    return beta, sweep


def gbt_boost(X, Xt, order, target, logistic, base, n_rounds, eta, max_depth,
              reg_lambda, gamma, min_child_weight):
    """Boosting loop with the same per-round arithmetic as the compiled kernel.

    ``exp``/``log1p`` come from numpy here and from libm there, so raw scores
    agree to rounding rather than bit for bit.
    """
    n = X.shape[0]
    cap = max(1, min(2 ** (max_depth + 1) - 1, 2 * max(n, 1) - 1))
    out = [np.full((n_rounds, cap), -1, dtype=np.intp), np.zeros((n_rounds, cap)),
           np.full((n_rounds, cap), -1, dtype=np.intp),
           np.full((n_rounds, cap), -1, dtype=np.intp), np.zeros((n_rounds, cap)),
           np.zeros((n_rounds, cap))]
    sizes = np.zeros(n_rounds, dtype=np.intp)
    history = np.zeros(n_rounds + 1)
    raw = np.full(n, float(base))
    active = np.ones(n, dtype=np.uint8)
    target = np.asarray(target, dtype=np.float64)
    for t in range(n_rounds + 1):
        if logistic:
            p = 1.0 / (1.0 + np.exp(-raw))
            grad = p - target
            hess = p * (1.0 - p)
            loss = np.where(raw > 0, raw + np.log1p(np.exp(-np.abs(raw))),
                            np.log1p(np.exp(np.minimum(raw, 0.0)))) - target * raw
        else:
            grad = raw - target
            hess = np.ones(n)
            loss = 0.5 * grad * grad
        history[t] = loss.sum() / n
        if t == n_rounds:
            break
        *parts, assign = gbt_grow_tree(X, Xt, order, grad, hess, active, max_depth,
                                       reg_lambda, gamma, min_child_weight)
        m = parts[0].size
        for arr, part in zip(out, parts):
            arr[t, :m] = part.ravel()
        sizes[t] = m
        raw = raw + eta * parts[5][assign, 0]
    return (*out, sizes, history)


def ensemble_predict(feature, threshold, left, right, value, X, eta, base):
    """``base + eta * sum_t value_t(x)`` over stacked trees, added tree by tree."""
    T, cap = feature.shape
    n, d = X.shape
    flat = [a.ravel() for a in (feature, threshold, left, right, value)]
    feature, threshold, left, right, value = flat
    Xf = X.ravel()
    offset = np.repeat(np.arange(T) * cap, n)
    rowbase = np.tile(np.arange(n) * d, T)
    node = offset.copy()  # flat node ids, one per (tree, row)
    live = np.arange(T * n)
    while live.size:
        nd = node[live]
        f = feature[nd]
        inner = f >= 0
        live, nd, f = live[inner], nd[inner], f[inner]
        go_left = Xf[rowbase[live] + f] <= threshold[nd]
        node[live] = offset[live] + np.where(go_left, left[nd], right[nd])
    leaf = value[node].reshape(T, n)
    out = np.full(n, float(base))
    for v in leaf:
        out += eta * v
    return out
