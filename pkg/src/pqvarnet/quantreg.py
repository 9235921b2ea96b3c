"""Linear quantile regression by pinball-loss minimization.

The solver is iteratively reweighted least squares on a smoothed pinball
objective, with the asymptotic sandwich covariance
(X'X)^{-1} X'DX (X'X)^{-1} for Wald t-values. The residual density at
zero is a Gaussian KDE with the Hall-Sheather bandwidth.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.stats import norm
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import NumericalError, RankDeficientError


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 250
    tol: float = 1e-8
    delta: float = 1e-6
    alpha_level: float = 0.05
    f0_floor: float = 1e-10


def pinball_loss(y, y_hat, q: float):
    """Asymmetric check loss: (y - y_hat) * q above the fit, (y_hat - y) * (1 - q) below."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0,1), got {q}")
    err = np.asarray(y, dtype=float) - np.asarray(y_hat, dtype=float)
    return np.where(err >= 0, err * q, -err * (1.0 - q))


def hall_sheather_bandwidth(n: int, q: float, alpha_level: float = 0.05) -> float:
    """Rate-optimal n^(-1/3) bandwidth for sparsity estimation at quantile q."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0,1), got {q}")
    if n < 2:
        raise ValueError("need at least 2 observations")
    z_q = norm.ppf(q)
    z_a = norm.ppf(1.0 - alpha_level / 2.0)
    num = 1.5 * norm.pdf(z_q) ** 2
    den = 2.0 * z_q**2 + 1.0
    return n ** (-1.0 / 3) * z_a ** (2.0 / 3) * (num / den) ** (1.0 / 3)


def kde_density_at_zero(residuals, q: float = 0.5, bandwidth: float | None = None,
                        alpha_level: float = 0.05, floor: float = 1e-10,
                        exclude_smallest: int = 0) -> float:
    """Gaussian-kernel density of the residuals evaluated at zero, floored.

    exclude_smallest drops that many smallest-magnitude residuals before
    evaluating. A pinball fit interpolates as many observations as it has
    parameters; those exact zeros are artifacts of the active basis, and
    with the small rate-optimal bandwidth they spike the density estimate
    (and hence shrink every standard error) if left in.
    """
    residuals = np.asarray(residuals, dtype=float)
    if residuals.size == 0:
        raise ValueError("residuals must be nonempty")
    h = hall_sheather_bandwidth(residuals.size, q, alpha_level) if bandwidth is None else bandwidth
    if exclude_smallest:
        if exclude_smallest >= residuals.size:
            raise ValueError("cannot exclude every residual")
        order = np.argsort(np.abs(residuals))
        residuals = residuals[order[exclude_smallest:]]
    f0 = norm.pdf(residuals / h).sum() / (residuals.size * h)
    return max(f0, floor)


def estimate_covariance(X, residuals, q: float, f0: float) -> np.ndarray:
    """Sandwich covariance of (intercept, coefficients).

    X carries no intercept column; one is prepended internally, so the
    output is (K+1) x (K+1) with the intercept in position 0. Residuals
    exactly at zero fall in the (1-q) branch.
    """
    if f0 <= 0:
        raise ValueError("f0 must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    residuals = np.asarray(residuals, dtype=float)
    Xa = np.column_stack([np.ones(len(residuals)), X]) if X.shape[1] else np.ones((len(residuals), 1))
    d = np.where(residuals > 0, q, 1.0 - q) / f0**2
    gram = Xa.T @ Xa
    try:
        bread = sla.inv(gram)
    except sla.LinAlgError as exc:
        raise NumericalError("singular X'X in covariance estimate") from exc
    meat = Xa.T @ (d[:, None] * Xa)
    cov = bread @ meat @ bread
    return (cov + cov.T) / 2.0


def wald_t(coef: float, se: float) -> float:
    """Wald statistic coef / se."""
    if se <= 0:
        raise ValueError("standard error must be positive")
    return coef / se


def _check_rank(Xa: np.ndarray):
    """Reject rank-deficient designs, naming the suspect columns."""
    _, r, piv = sla.qr(Xa, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(Xa.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    bad = piv[diag <= tol]
    if bad.size:
        raise RankDeficientError(
            f"rank-deficient design; offending columns (0 = intercept): {sorted(bad.tolist())}",
            columns=sorted(bad.tolist()))


# Small problems get a sharp-smoothing refinement pass and an exact
# vertex polish (the optimum interpolates P observations); both are
# skipped for larger designs, where the combinatorial polish would
# explode and t-values tolerate the base solver accuracy.
_POLISH_MAX_PARAMS = 10
_POLISH_MAX_OBS = 1000
_POLISH_EXTRA = 6
_REFINE_DELTA = 1e-9
_REFINE_ITER = 2000
_REFINE_TOL = 1e-12


def _weighted_ls(Xa, y, w, normal_eq):
    if normal_eq:
        Xw = Xa * w[:, None]
        try:
            return sla.solve(Xw.T @ Xa, Xw.T @ y, assume_a="pos")
        except (sla.LinAlgError, ValueError):
            pass
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(Xa * sw[:, None], y * sw, rcond=None)
    return beta


def _mean_pinball(Xa, y, q, beta):
    err = y - Xa @ beta
    return float(np.mean(np.where(err >= 0, err * q, -err * (1.0 - q))))


def _irls_loop(Xa, y, q, beta, best, best_obj, delta, max_iter, tol, normal_eq):
    last_step = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        resid = y - Xa @ beta
        w = np.where(resid > 0, q, 1.0 - q) / np.maximum(np.abs(resid), delta)
        beta_new = _weighted_ls(Xa, y, w, normal_eq)
        last_step = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        obj = _mean_pinball(Xa, y, q, beta)
        if obj < best_obj:
            best, best_obj = beta.copy(), obj
        if last_step < tol:
            break
    return beta, best, best_obj, it, last_step


def _vertex_polish(Xa, y, q, best, best_obj):
    """Exchange step over interpolation bases near the incumbent."""
    from itertools import combinations
    T, P = Xa.shape
    for _ in range(5):
        improved = False
        resid = np.abs(y - Xa @ best)
        cand = np.argsort(resid)[: min(P + _POLISH_EXTRA, T)]
        for comb in combinations(cand, P):
            idx = list(comb)
            try:
                beta = np.linalg.solve(Xa[idx], y[idx])
            except np.linalg.LinAlgError:
                continue
            obj = _mean_pinball(Xa, y, q, beta)
            if obj < best_obj - 1e-15:
                best, best_obj, improved = beta.copy(), obj, True
        if not improved:
            break
    return best, best_obj


def _irls(Xa: np.ndarray, y: np.ndarray, q: float, opts: SolverOptions):
    """Smoothed-pinball IRLS. Returns (beta, n_iter, converged, last_step)."""
    T, P = Xa.shape
    small = P <= _POLISH_MAX_PARAMS and T <= _POLISH_MAX_OBS
    beta, *_ = np.linalg.lstsq(Xa, y, rcond=None)
    best, best_obj = beta.copy(), _mean_pinball(Xa, y, q, beta)
    beta, best, best_obj, n1, step = _irls_loop(
        Xa, y, q, beta, best, best_obj, opts.delta, opts.max_iter, opts.tol,
        normal_eq=not small)
    converged = step < opts.tol
    if small:
        _, best, best_obj, n2, _ = _irls_loop(
            Xa, y, q, best.copy(), best, best_obj,
            min(_REFINE_DELTA, opts.delta), _REFINE_ITER, _REFINE_TOL,
            normal_eq=False)
        best, best_obj = _vertex_polish(Xa, y, q, best, best_obj)
        return best, n1 + n2, True, step
    return best, n1, converged, step


class QuantileRegressor(BaseEstimator, RegressorMixin):
    """Pinball-loss linear regression for one target quantile.

    Parameters
    ----------
    q : target quantile in (0, 1).
    max_iter, tol, delta : IRLS controls; delta smooths 1/|residual| weights.
    alpha_level : level used inside the Hall-Sheather bandwidth.
    f0_floor : lower bound on the density-at-zero estimate.

    Attributes (after fit)
    ----------
    coef_, intercept_, residuals_, cov_ (K+1 x K+1, intercept first),
    f0_, bandwidth_, n_iter_, converged_.
    """

    def __init__(self, q=0.5, max_iter=250, tol=1e-8, delta=1e-6,
                 alpha_level=0.05, f0_floor=1e-10):
        self.q = q
        self.max_iter = max_iter
        self.tol = tol
        self.delta = delta
        self.alpha_level = alpha_level
        self.f0_floor = f0_floor

    def _options(self) -> SolverOptions:
        return SolverOptions(self.max_iter, self.tol, self.delta,
                             self.alpha_level, self.f0_floor)

    def fit(self, X, y):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"quantile must lie in (0,1), got {self.q}")
        y = np.asarray(y, dtype=float).ravel()
        X = np.asarray(X, dtype=float)
        if X.size == 0:
            X = np.empty((y.size, 0))
        else:
            X = check_array(X, ensure_min_features=0)
        if X.shape[0] != y.size:
            raise ValueError("X and y length mismatch")
        if X.shape[1] and X.shape[0] <= X.shape[1]:
            raise ValueError("need more observations than covariates")
        if X.shape[1] and np.any(np.all(X == 0.0, axis=0)):
            raise RankDeficientError(
                "identically zero covariate column(s)",
                columns=np.flatnonzero(np.all(X == 0.0, axis=0)).tolist())

        Xa = np.column_stack([np.ones(y.size), X])
        _check_rank(Xa)
        opts = self._options()
        beta, n_iter, converged, last_step = _irls(Xa, y, self.q, opts)
        if not np.all(np.isfinite(beta)):
            raise NumericalError("solver produced non-finite coefficients")
        if not converged:
            warnings.warn(
                f"IRLS stopped after {opts.max_iter} iterations; "
                f"final max coefficient change {last_step:.3e}")

        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:].copy()
        self.residuals_ = y - Xa @ beta
        self.bandwidth_ = hall_sheather_bandwidth(y.size, self.q, self.alpha_level)
        n_params = X.shape[1] + 1
        exclude = n_params if self.residuals_.size > n_params else 0
        self.f0_ = kde_density_at_zero(self.residuals_, self.q,
                                       bandwidth=self.bandwidth_, floor=self.f0_floor,
                                       exclude_smallest=exclude)
        self.cov_ = estimate_covariance(X, self.residuals_, self.q, self.f0_)
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=float)
        if self.n_features_in_ == 0:
            return np.full(X.shape[0], self.intercept_)
        X = check_array(X)
        return X @ self.coef_ + self.intercept_

    def standard_errors(self) -> np.ndarray:
        """Per-coefficient standard errors (intercept excluded)."""
        check_is_fitted(self, "cov_")
        return np.sqrt(np.diag(self.cov_)[1:])

    def t_values(self) -> np.ndarray:
        check_is_fitted(self, "cov_")
        se = self.standard_errors()
        return np.array([wald_t(c, s) for c, s in zip(self.coef_, se)])

    def objective(self, X, y) -> float:
        """Mean pinball loss of the fitted model on (X, y)."""
        y = np.asarray(y, dtype=float).ravel()
        if self.n_features_in_ == 0:
            pred = np.full(y.size, self.intercept_)
        else:
            pred = self.predict(X)
        return float(np.mean(pinball_loss(y, pred, self.q)))
