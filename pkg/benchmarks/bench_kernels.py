"""Compiled vs numpy kernel timings.

Times each hot kernel in isolation, then whole estimator fits with the
kernel table swapped to one backend at a time. Run with

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]
"""

from __future__ import annotations

import argparse
import contextlib
import time

import numpy as np

import framesel._kernels as K
from framesel._kernels import _pykernels as py
from framesel.estimators import EstimatorSpec, fit
from framesel.estimators.trees import Presorted

try:
    from framesel._kernels import _ckernels as cy
except ImportError:  # extension not built
    cy = None

KERNELS = ("gbt_level_split", "gbt_boost", "ensemble_predict", "gbt_grow_tree",
           "cart_level_split_gini", "cart_level_split_mse", "enet_cd")


@contextlib.contextmanager
def backend(mod):
    saved = {k: getattr(K, k) for k in KERNELS}
    for k in KERNELS:
        setattr(K, k, getattr(mod, k))
    try:
        yield
    finally:
        for k, v in saved.items():
            setattr(K, k, v)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng, n, d):
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.normal(size=n) > 0).astype(np.float64)
    ps = Presorted.of(X)
    grad = 0.5 - y
    hess = np.full(n, 0.25)
    node_of = np.zeros(n, dtype=np.intp)
    active = np.ones(n, dtype=np.uint8)
    G, H = np.array([grad.sum()]), np.array([hess.sum()])
    boost_args = (ps.X, ps.Xt, ps.order, y, True, 0.0, 50, 0.3, 3, 1.0, 0.0, 1.0)
    stacks = cy.gbt_boost(*boost_args) if cy else py.gbt_boost(*boost_args)
    Xs = X - X.mean(axis=0)
    Xs /= Xs.std(axis=0)
    Xf = np.asfortranarray(Xs)
    yc = Xs[:, :5] @ np.arange(1.0, 6.0) + rng.normal(size=n)
    yc -= yc.mean()
    return {
        "gbt_level_split (root)": lambda m: m.gbt_level_split(
            ps.Xt, ps.order, node_of, grad, hess, G, H, 1.0, 0.0, 1.0),
        "gbt_grow_tree (depth 3)": lambda m: m.gbt_grow_tree(
            ps.X, ps.Xt, ps.order, grad, hess, active, 3, 1.0, 0.0, 1.0),
        "gbt_boost (50 rounds)": lambda m: m.gbt_boost(*boost_args),
        "ensemble_predict (50 trees)": lambda m: m.ensemble_predict(
            *stacks[:4], stacks[5], ps.X, 0.3, 0.0),
        "enet_cd (lambda 0.05)": lambda m: m.enet_cd(
            Xf, yc.copy(), np.zeros(d), 0.05, 1.0, 1000, 1e-6),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled extension not built; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    n, d = (200, 20) if args.quick else (350, 60)

    print(f"kernels on {n}x{d}, best of {args.repeat}")
    print(f"{'kernel':32s} {'cython ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, call in kernel_cases(rng, n, d).items():
        tc = best_of(lambda: call(cy), args.repeat)
        tp = best_of(lambda: call(py), args.repeat)
        print(f"{name:32s} {1e3 * tc:10.3f} {1e3 * tp:10.3f} {tp / tc:7.1f}x")

    X = rng.normal(size=(n, d))
    y = (X[:, :3].sum(axis=1) > 0).astype(np.int64)
    fits = {
        "gbt fit": EstimatorSpec("gbt"),
        "random_forest fit (20 trees)": EstimatorSpec("random_forest", {"n_trees": 20}),
        "cart fit": EstimatorSpec("cart"),
    }
    print(f"\nestimator fits on {n}x{d}, best of {args.repeat}")
    for name, spec in fits.items():
        row = []
        for mod in (cy, py):
            with backend(mod):
                row.append(best_of(lambda: fit(spec, X, y, "binary"), args.repeat))
        print(f"{name:32s} {1e3 * row[0]:10.3f} {1e3 * row[1]:10.3f} {row[1] / row[0]:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
