# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split-search and coordinate-descent kernels.

Every function here has a numpy twin in ``_pykernels`` with the same
signature and bit-identical results for the tree kernels.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, exp, log1p, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef cnp.intp_t intp


cdef void _gbt_scan(const double[:, ::1] Xt, const intp[:, ::1] order,
                    const intp[::1] node_of, const double[::1] grad,
                    const double[::1] hess, const double[::1] G, const double[::1] H,
                    Py_ssize_t K, double reg_lambda, double gamma, double min_child_weight,
                    intp[::1] feat, double[::1] lo, double[::1] hi, double[::1] best,
                    double[::1] GL, double[::1] HL, double[::1] last, char[::1] seen) noexcept nogil:
    cdef Py_ssize_t d = Xt.shape[0], n = Xt.shape[1]
    cdef Py_ssize_t j, i, r, k
    cdef double v, gl, hl, gr, hr, gain
    for k in range(K):
        feat[k] = -1
        lo[k] = 0.0
        hi[k] = 0.0
        best[k] = -INFINITY
    for j in range(d):
        for k in range(K):
            GL[k] = 0.0
            HL[k] = 0.0
            seen[k] = 0
        for i in range(n):
            r = order[j, i]
            k = node_of[r]
            if k < 0:
                continue
            v = Xt[j, r]
            if seen[k] and v != last[k]:
                gl = GL[k]
                hl = HL[k]
                gr = G[k] - gl
                hr = H[k] - hl
                if hl >= min_child_weight and hr >= min_child_weight:
                    gain = 0.5 * (gl * gl / (hl + reg_lambda)
                                  + gr * gr / (hr + reg_lambda)
                                  - G[k] * G[k] / (H[k] + reg_lambda)) - gamma
                    if gain > best[k]:
                        best[k] = gain
                        feat[k] = j
                        lo[k] = last[k]
                        hi[k] = v
            GL[k] += grad[r]
            HL[k] += hess[r]
            last[k] = v
            seen[k] = 1


def gbt_level_split(const double[:, ::1] Xt, const intp[:, ::1] order,
                    const intp[::1] node_of, const double[::1] grad,
                    const double[::1] hess, const double[::1] G,
                    const double[::1] H, double reg_lambda, double gamma,
                    double min_child_weight):
    cdef Py_ssize_t K = G.shape[0]
    feat_a = np.full(K, -1, dtype=np.intp)
    lo_a = np.zeros(K)
    hi_a = np.zeros(K)
    gain_a = np.full(K, -INFINITY)
    cdef intp[::1] feat = feat_a
    cdef double[::1] lo = lo_a, hi = hi_a, best = gain_a
    cdef double[::1] GL = np.zeros(K), HL = np.zeros(K), last = np.zeros(K)
    cdef char[::1] seen = np.zeros(K, dtype=np.int8)
    with nogil:
        _gbt_scan(Xt, order, node_of, grad, hess, G, H, K, reg_lambda, gamma,
                  min_child_weight, feat, lo, hi, best, GL, HL, last, seen)
    return feat_a, lo_a, hi_a, gain_a


cdef struct GrowScratch:
    intp* node_of
    double* G
    double* H
    intp* cnt
    char* splittable
    char* do_split
    intp* feat
    intp* lchild
    double* lo
    double* hi
    double* best
    double* thr
    double* GL
    double* HL
    double* last
    char* seen


cdef int _scratch_alloc(GrowScratch* w, Py_ssize_t n, Py_ssize_t width) noexcept nogil:
    w.node_of = <intp*> malloc(n * sizeof(intp))
    w.G = <double*> malloc(width * sizeof(double))
    w.H = <double*> malloc(width * sizeof(double))
    w.cnt = <intp*> malloc(width * sizeof(intp))
    w.splittable = <char*> malloc(width)
    w.do_split = <char*> malloc(width)
    w.feat = <intp*> malloc(width * sizeof(intp))
    w.lchild = <intp*> malloc(width * sizeof(intp))
    w.lo = <double*> malloc(width * sizeof(double))
    w.hi = <double*> malloc(width * sizeof(double))
    w.best = <double*> malloc(width * sizeof(double))
    w.thr = <double*> malloc(width * sizeof(double))
    w.GL = <double*> malloc(width * sizeof(double))
    w.HL = <double*> malloc(width * sizeof(double))
    w.last = <double*> malloc(width * sizeof(double))
    w.seen = <char*> malloc(width)
    if (not w.node_of or not w.G or not w.H or not w.cnt or not w.splittable
            or not w.do_split or not w.feat or not w.lchild or not w.lo or not w.hi
            or not w.best or not w.thr or not w.GL or not w.HL or not w.last or not w.seen):
        return -1
    return 0


cdef void _scratch_free(GrowScratch* w) noexcept nogil:
    free(w.node_of); free(w.G); free(w.H); free(w.cnt); free(w.splittable)
    free(w.do_split); free(w.feat); free(w.lchild); free(w.lo); free(w.hi)
    free(w.best); free(w.thr); free(w.GL); free(w.HL); free(w.last); free(w.seen)


cdef Py_ssize_t _grow(const double[:, ::1] X, const double[:, ::1] Xt,
                      const intp[:, ::1] order, const double* grad, const double* hess,
                      const cnp.uint8_t* active, int max_depth, double reg_lambda,
                      double gamma, double min_child_weight, GrowScratch* w,
                      intp* feature, double* threshold, intp* left, intp* right,
                      double* gainv, intp* assign) noexcept nogil:
    """Grow one boosting tree into caller-owned node arrays; returns the node count.
    Leaf weights are filled separately by ``_leaf_values``."""
    cdef Py_ssize_t n = X.shape[0], d = Xt.shape[0]
    cdef Py_ssize_t r, k, j, i, first = 0, width = 1, next_id = 1, n_split, node, depth
    cdef double v, gl, hl, gr, hr, gain, t
    cdef bint any_open
    feature[0] = -1
    threshold[0] = 0.0
    left[0] = -1
    right[0] = -1
    gainv[0] = 0.0
    for r in range(n):
        assign[r] = 0 if active[r] else -1
    for depth in range(max_depth):
        for k in range(width):
            w.G[k] = 0.0
            w.H[k] = 0.0
            w.cnt[k] = 0
        for r in range(n):
            k = assign[r] - first
            if assign[r] < 0 or k < 0:
                w.node_of[r] = -1
                continue
            w.node_of[r] = k
            w.G[k] += grad[r]
            w.H[k] += hess[r]
            w.cnt[k] += 1
        any_open = False
        for k in range(width):
            w.splittable[k] = w.cnt[k] >= 2 and w.H[k] >= 2 * min_child_weight
            if w.splittable[k]:
                any_open = True
        if not any_open:
            break
        for r in range(n):
            if w.node_of[r] >= 0 and not w.splittable[w.node_of[r]]:
                w.node_of[r] = -1
        for k in range(width):
            w.feat[k] = -1
            w.lo[k] = 0.0
            w.hi[k] = 0.0
            w.best[k] = -INFINITY
        for j in range(d):
            for k in range(width):
                w.GL[k] = 0.0
                w.HL[k] = 0.0
                w.seen[k] = 0
            for i in range(n):
                r = order[j, i]
                k = w.node_of[r]
                if k < 0:
                    continue
                v = Xt[j, r]
                if w.seen[k] and v != w.last[k]:
                    gl = w.GL[k]
                    hl = w.HL[k]
                    gr = w.G[k] - gl
                    hr = w.H[k] - hl
                    if hl >= min_child_weight and hr >= min_child_weight:
                        gain = 0.5 * (gl * gl / (hl + reg_lambda)
                                      + gr * gr / (hr + reg_lambda)
                                      - w.G[k] * w.G[k] / (w.H[k] + reg_lambda)) - gamma
                        if gain > w.best[k]:
                            w.best[k] = gain
                            w.feat[k] = j
                            w.lo[k] = w.last[k]
                            w.hi[k] = v
                w.GL[k] += grad[r]
                w.HL[k] += hess[r]
                w.last[k] = v
                w.seen[k] = 1
        n_split = 0
        for k in range(width):
            w.do_split[k] = w.splittable[k] and w.feat[k] >= 0 and w.best[k] > 0
            if w.do_split[k]:
                w.lchild[k] = next_id + 2 * n_split
                n_split += 1
                t = w.lo[k] + (w.hi[k] - w.lo[k]) / 2.0
                w.thr[k] = w.lo[k] if t >= w.hi[k] else t
                node = first + k
                feature[node] = w.feat[k]
                threshold[node] = w.thr[k]
                left[node] = w.lchild[k]
                right[node] = w.lchild[k] + 1
                gainv[node] = w.best[k]
                for i in range(2):
                    feature[w.lchild[k] + i] = -1
                    threshold[w.lchild[k] + i] = 0.0
                    left[w.lchild[k] + i] = -1
                    right[w.lchild[k] + i] = -1
                    gainv[w.lchild[k] + i] = 0.0
        if n_split == 0:
            break
        for r in range(n):
            k = w.node_of[r]
            if k >= 0 and w.do_split[k]:
                if X[r, w.feat[k]] <= w.thr[k]:
                    assign[r] = w.lchild[k]
                else:
                    assign[r] = w.lchild[k] + 1
        first = next_id
        width = 2 * n_split
        next_id += 2 * n_split
    return next_id


cdef void _leaf_values(const double* grad, const double* hess, const intp* assign,
                       Py_ssize_t n, Py_ssize_t n_nodes, double reg_lambda,
                       double* Gn, double* Hn, double* value) noexcept nogil:
    cdef Py_ssize_t r, k
    for k in range(n_nodes):
        Gn[k] = 0.0
        Hn[k] = 0.0
    for r in range(n):
        if assign[r] >= 0:
            Gn[assign[r]] += grad[r]
            Hn[assign[r]] += hess[r]
    for k in range(n_nodes):
        value[k] = -Gn[k] / (Hn[k] + reg_lambda)


cdef inline Py_ssize_t _node_cap(int max_depth, Py_ssize_t n_active) noexcept nogil:
    cdef Py_ssize_t a = (<Py_ssize_t>1 << (max_depth + 1)) - 1
    cdef Py_ssize_t b = 2 * (n_active if n_active > 1 else 1) - 1
    return a if a < b else b


cdef inline Py_ssize_t _width_cap(int max_depth, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t a = <Py_ssize_t>1 << max_depth
    a = a if a < n else n
    return a if a > 1 else 1


def gbt_grow_tree(const double[:, ::1] X, const double[:, ::1] Xt,
                  const intp[:, ::1] order, const double[::1] grad,
                  const double[::1] hess, const cnp.uint8_t[::1] active,
                  int max_depth, double reg_lambda, double gamma,
                  double min_child_weight):
    """Whole boosting tree in one call; mirrors ``_pykernels.gbt_grow_tree``."""
    cdef Py_ssize_t n = X.shape[0], r, n_active = 0, m
    for r in range(n):
        if active[r]:
            n_active += 1
    cdef Py_ssize_t cap = _node_cap(max_depth, n_active)
    feature_a = np.full(cap, -1, dtype=np.intp)
    threshold_a = np.zeros(cap)
    left_a = np.full(cap, -1, dtype=np.intp)
    right_a = np.full(cap, -1, dtype=np.intp)
    gain_a = np.zeros(cap)
    value_a = np.zeros(cap)
    assign_a = np.empty(n, dtype=np.intp)
    cdef intp[::1] feature = feature_a, left = left_a, right = right_a, assign = assign_a
    cdef double[::1] threshold = threshold_a, gainv = gain_a, value = value_a
    cdef GrowScratch w
    if _scratch_alloc(&w, n, max(_width_cap(max_depth, n), cap)) != 0:
        _scratch_free(&w)
        raise MemoryError()
    with nogil:
        m = _grow(X, Xt, order, &grad[0], &hess[0], &active[0], max_depth, reg_lambda,
                  gamma, min_child_weight, &w, &feature[0], &threshold[0], &left[0],
                  &right[0], &gainv[0], &assign[0])
        _leaf_values(&grad[0], &hess[0], &assign[0], n, m, reg_lambda, w.G, w.H, &value[0])
    _scratch_free(&w)
    return (feature_a[:m].copy(), threshold_a[:m].copy(), left_a[:m].copy(),
            right_a[:m].copy(), gain_a[:m].copy(), value_a[:m, None].copy(), assign_a)


def gbt_boost(const double[:, ::1] X, const double[:, ::1] Xt, const intp[:, ::1] order,
              const double[::1] target, bint logistic, double base, int n_rounds,
              double eta, int max_depth, double reg_lambda, double gamma,
              double min_child_weight):
    """Full boosting loop. Returns stacked per-round node arrays, node counts and
    the training loss before each round and after the last one."""
    cdef Py_ssize_t n = X.shape[0], r, t, m, k
    cdef Py_ssize_t cap = _node_cap(max_depth, n)
    features_a = np.full((n_rounds, cap), -1, dtype=np.intp)
    thresholds_a = np.zeros((n_rounds, cap))
    lefts_a = np.full((n_rounds, cap), -1, dtype=np.intp)
    rights_a = np.full((n_rounds, cap), -1, dtype=np.intp)
    gains_a = np.zeros((n_rounds, cap))
    values_a = np.zeros((n_rounds, cap))
    sizes_a = np.zeros(n_rounds, dtype=np.intp)
    history_a = np.zeros(n_rounds + 1)
    cdef intp[:, ::1] features = features_a, lefts = lefts_a, rights = rights_a
    cdef double[:, ::1] thresholds = thresholds_a, gains = gains_a, values = values_a
    cdef intp[::1] sizes = sizes_a
    cdef double[::1] history = history_a
    cdef double* raw = <double*> malloc(n * sizeof(double))
    cdef double* grad = <double*> malloc(n * sizeof(double))
    cdef double* hess = <double*> malloc(n * sizeof(double))
    cdef intp* assign = <intp*> malloc(n * sizeof(intp))
    cdef cnp.uint8_t* active = <cnp.uint8_t*> malloc(n)
    cdef GrowScratch w
    cdef int failed = _scratch_alloc(&w, n, max(_width_cap(max_depth, n), cap))
    cdef double p, loss, z
    if failed or not raw or not grad or not hess or not assign or not active:
        free(raw); free(grad); free(hess); free(assign); free(active)
        _scratch_free(&w)
        raise MemoryError()
    with nogil:
        for r in range(n):
            raw[r] = base
            active[r] = 1
        for t in range(n_rounds + 1):
            loss = 0.0
            for r in range(n):
                z = raw[r]
                if logistic:
                    p = 1.0 / (1.0 + exp(-z))
                    grad[r] = p - target[r]
                    hess[r] = p * (1.0 - p)
                    if z > 0:
                        loss += z + log1p(exp(-z)) - target[r] * z
                    else:
                        loss += log1p(exp(z)) - target[r] * z
                else:
                    grad[r] = z - target[r]
                    hess[r] = 1.0
                    loss += 0.5 * grad[r] * grad[r]
            history[t] = loss / n
            if t == n_rounds:
                break
            m = _grow(X, Xt, order, grad, hess, active, max_depth, reg_lambda, gamma,
                      min_child_weight, &w, &features[t, 0], &thresholds[t, 0],
                      &lefts[t, 0], &rights[t, 0], &gains[t, 0], assign)
            _leaf_values(grad, hess, assign, n, m, reg_lambda, w.G, w.H, &values[t, 0])
            sizes[t] = m
            for r in range(n):
                raw[r] += eta * values[t, assign[r]]
    free(raw); free(grad); free(hess); free(assign); free(active)
    _scratch_free(&w)
    return features_a, thresholds_a, lefts_a, rights_a, gains_a, values_a, sizes_a, history_a


def cart_level_split_gini(const double[:, ::1] Xt, const intp[:, ::1] order,
                          const intp[::1] node_of, const cnp.int64_t[::1] weight,
                          const intp[::1] y, const cnp.int64_t[:, ::1] counts,
                          const cnp.uint8_t[:, ::1] fmask, cnp.int64_t min_leaf):
    cdef Py_ssize_t d = Xt.shape[0], n = Xt.shape[1]
    cdef Py_ssize_t K = counts.shape[0], C = counts.shape[1]
    cdef Py_ssize_t j, i, r, k, c
    cdef cnp.int64_t w, nl, nr, lc, rc
    cdef double v, gain
    feat_a = np.full(K, -1, dtype=np.intp)
    lo_a = np.zeros(K)
    hi_a = np.zeros(K)
    gain_a = np.full(K, -INFINITY)
    cdef intp[::1] feat = feat_a
    cdef double[::1] lo = lo_a, hi = hi_a, best = gain_a
    cdef cnp.int64_t[:, ::1] L = np.zeros((K, C), dtype=np.int64)
    cdef cnp.int64_t[::1] N = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] NL = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] sqT = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] sqL = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] sqR = np.zeros(K, dtype=np.int64)
    cdef double[::1] last = np.zeros(K)
    cdef char[::1] seen = np.zeros(K, dtype=np.int8)
    cdef char[::1] used = np.zeros(d, dtype=np.int8)
    with nogil:
        for k in range(K):
            for c in range(C):
                N[k] += counts[k, c]
                sqT[k] += counts[k, c] * counts[k, c]
            for j in range(d):
                if fmask[k, j]:
                    used[j] = 1
        for j in range(d):
            if not used[j]:
                continue
            for k in range(K):
                for c in range(C):
                    L[k, c] = 0
                NL[k] = 0
                sqL[k] = 0
                sqR[k] = sqT[k]
                seen[k] = 0
            for i in range(n):
                r = order[j, i]
                k = node_of[r]
                if k < 0 or not fmask[k, j]:
                    continue
                v = Xt[j, r]
                if seen[k] and v != last[k]:
                    nl = NL[k]
                    nr = N[k] - nl
                    if nl >= min_leaf and nr >= min_leaf:
                        gain = (<double>sqL[k] / <double>nl
                                + <double>sqR[k] / <double>nr
                                - <double>sqT[k] / <double>N[k])
                        if gain > best[k]:
                            best[k] = gain
                            feat[k] = j
                            lo[k] = last[k]
                            hi[k] = v
                w = weight[r]
                c = y[r]
                lc = L[k, c]
                rc = counts[k, c] - lc
                sqL[k] += 2 * lc * w + w * w
                sqR[k] += -2 * rc * w + w * w
                L[k, c] = lc + w
                NL[k] += w
                last[k] = v
                seen[k] = 1
    return feat_a, lo_a, hi_a, gain_a


def cart_level_split_mse(const double[:, ::1] Xt, const intp[:, ::1] order,
                         const intp[::1] node_of, const cnp.int64_t[::1] weight,
                         const double[::1] wy, const double[::1] S,
                         const cnp.int64_t[::1] N, const cnp.uint8_t[:, ::1] fmask,
                         cnp.int64_t min_leaf):
    cdef Py_ssize_t d = Xt.shape[0], n = Xt.shape[1], K = S.shape[0]
    cdef Py_ssize_t j, i, r, k
    cdef cnp.int64_t nl, nr
    cdef double v, gain, sl, sr
    feat_a = np.full(K, -1, dtype=np.intp)
    lo_a = np.zeros(K)
    hi_a = np.zeros(K)
    gain_a = np.full(K, -INFINITY)
    cdef intp[::1] feat = feat_a
    cdef double[::1] lo = lo_a, hi = hi_a, best = gain_a
    cdef double[::1] SL = np.zeros(K), last = np.zeros(K)
    cdef cnp.int64_t[::1] NL = np.zeros(K, dtype=np.int64)
    cdef char[::1] seen = np.zeros(K, dtype=np.int8)
    cdef char[::1] used = np.zeros(d, dtype=np.int8)
    with nogil:
        for k in range(K):
            for j in range(d):
                if fmask[k, j]:
                    used[j] = 1
        for j in range(d):
            if not used[j]:
                continue
            for k in range(K):
                SL[k] = 0.0
                NL[k] = 0
                seen[k] = 0
            for i in range(n):
                r = order[j, i]
                k = node_of[r]
                if k < 0 or not fmask[k, j]:
                    continue
                v = Xt[j, r]
                if seen[k] and v != last[k]:
                    nl = NL[k]
                    nr = N[k] - nl
                    if nl >= min_leaf and nr >= min_leaf:
                        sl = SL[k]
                        sr = S[k] - sl
                        gain = (sl * sl / <double>nl + sr * sr / <double>nr
                                - S[k] * S[k] / <double>N[k])
                        if gain > best[k]:
                            best[k] = gain
                            feat[k] = j
                            lo[k] = last[k]
                            hi[k] = v
                SL[k] += wy[r]
                NL[k] += weight[r]
                last[k] = v
                seen[k] = 1
    return feat_a, lo_a, hi_a, gain_a


def enet_cd(const double[::1, :] X, const double[::1] resid, double[::1] beta,
            double lam, double l1_ratio, Py_ssize_t max_sweeps, double tol):
    """Cyclic coordinate descent; ``resid`` is y - mean(y) - X @ beta on entry."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t j, i, sweep = 0
    cdef double rho, z, old, new, thr, denom, delta, max_delta
    cdef double l1 = lam * l1_ratio, l2 = lam * (1.0 - l1_ratio)
    r_a = np.array(resid, dtype=np.float64)
    cdef double[::1] r = r_a
    cdef double[::1] zz = np.empty(d)
    with nogil:
        for j in range(d):
            z = 0.0
            for i in range(n):
                z = z + X[i, j] * X[i, j]
            zz[j] = z
        while sweep < max_sweeps:
            sweep += 1
            max_delta = 0.0
            for j in range(d):
                old = beta[j]
                rho = 0.0
                for i in range(n):
                    rho = rho + X[i, j] * r[i]
                rho = rho + zz[j] * old
                thr = rho / n
                denom = zz[j] / n + l2
                if thr > l1 and denom > 0:
                    new = (thr - l1) / denom
                elif thr < -l1 and denom > 0:
                    new = (thr + l1) / denom
                else:
                    new = 0.0
                delta = new - old
                if delta != 0.0:
                    for i in range(n):
                        r[i] = r[i] - X[i, j] * delta
                    beta[j] = new
                if fabs(delta) > max_delta:
                    max_delta = fabs(delta)
            if max_delta < tol:
                break
    return np.asarray(beta), sweep


def ensemble_predict(const intp[:, ::1] feature, const double[:, ::1] threshold,
                     const intp[:, ::1] left, const intp[:, ::1] right,
                     const double[:, ::1] value, const double[:, ::1] X,
                     double eta, double base):
    """``base + eta * sum_t value_t(x)`` over stacked trees, added tree by tree."""
    cdef Py_ssize_t T = feature.shape[0], n = X.shape[0], t, r, node
    out_a = np.empty(n)
    cdef double[::1] out = out_a
    with nogil:
        for r in range(n):
            out[r] = base
        for t in range(T):
            for r in range(n):
                node = 0
                while feature[t, node] >= 0:
                    if X[r, feature[t, node]] <= threshold[t, node]:
                        node = left[t, node]
                    else:
                        node = right[t, node]
                out[r] += eta * value[t, node]
    return out_a
