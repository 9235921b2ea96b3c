"""Shared oracles for the test suite.

The pinball-loss LP gives an independent ground-truth optimum for the
quantile-regression solver; the naive Spearman oracle evaluates the
textbook rank formula directly.
"""

import numpy as np
from scipy.optimize import linprog


def lp_pinball_optimum(X, y, q):
    """Exact minimum of the mean pinball loss via the standard LP split.

    minimize q*1'u_pos + (1-q)*1'u_neg
    subject to [1 X] beta + u_pos - u_neg = y, u_pos, u_neg >= 0.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T = y.size
    Xa = np.column_stack([np.ones(T), X]) if X.size else np.ones((T, 1))
    P = Xa.shape[1]
    c = np.concatenate([np.zeros(P), np.full(T, q), np.full(T, 1.0 - q)])
    A_eq = np.hstack([Xa, np.eye(T), -np.eye(T)])
    bounds = [(None, None)] * P + [(0, None)] * (2 * T)
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs")
    assert res.status == 0, f"LP oracle failed: {res.message}"
    return res.fun / T


def naive_spearman(x, y):
    """1 - 6*sum(d^2)/(n(n^2-1)) on tie-free data, evaluated directly."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    rx = np.argsort(np.argsort(x)) + 1
    ry = np.argsort(np.argsort(y)) + 1
    d = rx - ry
    return 1.0 - 6.0 * float(np.sum(d * d)) / (n * (n * n - 1))
