"""Linear learners: least squares, elastic net, logistic regression, linear SVM."""

from __future__ import annotations

import numpy as np

from .. import _kernels

RIDGE_JITTER = 1e-10
STANDARDIZED_MEAN_TOL = 1e-6


class NotStandardizedError(ValueError):
    pass


def solve_ols(X, y):
    """Least squares with intercept via QR; ridge-jittered lstsq when rank deficient."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("ols needs at least one row")
    mx = X.mean(axis=0)
    my = y.mean()
    Xc = X - mx
    yc = y - my
    n, d = Xc.shape
    if d == 0:
        return np.zeros(0), my
    Q, R = np.linalg.qr(Xc)
    diag = np.abs(np.diag(R))
    full_rank = n >= d and diag.size == d and diag.min() > 1e-10 * max(diag.max(), 1.0)
    if full_rank:
        coef = np.linalg.solve(R, Q.T @ yc)
    else:
        A = np.vstack([Xc, np.sqrt(RIDGE_JITTER) * np.eye(d)])
        b = np.concatenate([yc, np.zeros(d)])
        coef = np.linalg.lstsq(A, b, rcond=None)[0]
    return coef, my - mx @ coef


def enet_objective(beta, X, y, lam, l1_ratio):
    """(1/2n)||y - ȳ - Xβ||² + λ(α||β||₁ + (1-α)/2 ||β||²)."""
    r = y - y.mean() - X @ beta
    n = X.shape[0]
    return (r @ r) / (2 * n) + lam * (l1_ratio * np.abs(beta).sum()
                                      + 0.5 * (1 - l1_ratio) * (beta @ beta))


def enet_smooth_gradient(beta, X, y, lam, l1_ratio):
    """Gradient of the differentiable part (everything except the L1 term)."""
    r = y - y.mean() - X @ beta
    return -(X.T @ r) / X.shape[0] + lam * (1 - l1_ratio) * beta


def lambda_max(X, y, l1_ratio: float = 1.0) -> float:
    """Smallest λ for which the elastic net solution is identically zero."""
    X = np.asarray(X, dtype=np.float64)
    yc = np.asarray(y, dtype=np.float64) - np.mean(y)
    return float(np.abs(X.T @ yc).max() / (X.shape[0] * l1_ratio))


def solve_elastic_net(X, y, lam, l1_ratio=1.0, max_sweeps=1000, tol=1e-6):
    """Cyclic coordinate descent on standardized columns; intercept is mean(y).

    Returns ``(coef, intercept, n_sweeps)``.
    """
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lam < 0 or not 0.0 <= l1_ratio <= 1.0:
        raise ValueError("need lambda >= 0 and l1_ratio in [0, 1]")
    if X.shape[0] and np.abs(X.mean(axis=0)).max(initial=0.0) > STANDARDIZED_MEAN_TOL:
        raise NotStandardizedError("elastic net expects standardized (zero-mean) columns")
    beta = np.zeros(X.shape[1])
    resid = y - y.mean()
    # beta = 0 already satisfies the optimality conditions at or above lambda_max
    if l1_ratio > 0 and X.shape[1] and np.abs(X.T @ resid).max() / X.shape[0] <= lam * l1_ratio:
        return beta, float(y.mean()), 0
    beta, sweeps = _kernels.enet_cd(X, resid, beta, float(lam), float(l1_ratio),
                                    int(max_sweeps), float(tol))
    return np.asarray(beta), float(y.mean()), int(sweeps)


def _signed(y01):
    return 2.0 * np.asarray(y01, dtype=np.float64) - 1.0


def logistic_objective(w, b, X, y01, lam):
    """Mean log-loss with labels in {0, 1} plus (λ/2)||w||²; returns (f, grad_w, grad_b)."""
    s = _signed(y01)
    m = s * (X @ w + b)
    f = np.mean(np.logaddexp(0.0, -m)) + 0.5 * lam * (w @ w)
    coeff = -s * _sigmoid(-m) / X.shape[0]
    return f, X.T @ coeff + lam * w, coeff.sum()


def squared_hinge_objective(w, b, X, y01, lam):
    """(λ/2)||w||² + mean(max(0, 1 - ỹ(xᵀw + b))²); returns (f, grad_w, grad_b)."""
    s = _signed(y01)
    slack = np.maximum(0.0, 1.0 - s * (X @ w + b))
    f = 0.5 * lam * (w @ w) + np.mean(slack ** 2)
    coeff = -2.0 * s * slack / X.shape[0]
    return f, X.T @ coeff + lam * w, coeff.sum()


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def gradient_descent(objective, d, max_iter=500, tol=1e-6):
    """Full-batch descent with Armijo backtracking.

    ``objective(w, b)`` returns ``(f, grad_w, grad_b)``. Returns ``(w, b, history)``
    where ``history`` lists the objective after every accepted step.
    """
    w = np.zeros(d)
    b = 0.0
    f, gw, gb = objective(w, b)
    history = [f]
    step = 1.0
    for _ in range(max_iter):
        gnorm2 = gw @ gw + gb * gb
        if np.sqrt(gnorm2) < tol:
            break
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            f_new, gw_new, gb_new = objective(w_new, b_new)
            if f_new <= f - 0.5 * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        if f_new > f:
            break
        w, b, f, gw, gb = w_new, b_new, f_new, gw_new, gb_new
        history.append(f)
        step = min(step * 2.0, 1e6)
    return w, b, history
