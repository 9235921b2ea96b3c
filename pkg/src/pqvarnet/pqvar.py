"""Piecewise quantile VAR(1) and the baseline standard VAR.

For each target asset: a median regression on the embedded lagged design,
then 0.1/0.9 quantile regressions of the median residuals on the same
design. Tail-input coefficients are reported as net slopes (tail + linear)
with the covariance-adjusted variance, giving nine (input-region x
target-quantile) coefficient and t-value matrices. Matrices are oriented
source-row, target-column.
"""

from __future__ import annotations

import warnings

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg as sla
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .embedding import REGIONS, PiecewiseEmbedding, _as_matrix
from .errors import DataError, NumericalError
from .quantreg import QuantileRegressor

TARGETS = ("q10", "median", "q90")
LAG = 1  # analysis is restricted to first-order dynamics


def target_label(q: float) -> str:
    return "median" if q == 0.5 else f"q{int(round(q * 100))}"


def residual_shift(y, median_prediction) -> np.ndarray:
    """Residuals y - median fit; tail regressions target quantiles of these."""
    y = np.asarray(y, dtype=float).ravel()
    median_prediction = np.asarray(median_prediction, dtype=float).ravel()
    if y.size != median_prediction.size:
        raise ValueError("length mismatch between target and median prediction")
    return y - median_prediction


def net_slope(tail_coef, lin_coef, pair_cov, var_floor=1e-20):
    """Net slope tail + linear with variance from the joint 2x2 covariance.

    pair_cov has shape (..., 2, 2) ordered (tail, linear). The variance is
    the quadratic form [1,1] Sigma [1,1]'; negative numerical results are
    floored at var_floor and flagged.
    """
    tail_coef = np.asarray(tail_coef, dtype=float)
    lin_coef = np.asarray(lin_coef, dtype=float)
    pair_cov = np.asarray(pair_cov, dtype=float)
    net = tail_coef + lin_coef
    var = pair_cov[..., 0, 0] + pair_cov[..., 1, 1] + 2.0 * pair_cov[..., 0, 1]
    bad = var <= 0
    if np.any(bad):
        warnings.warn(f"{int(np.count_nonzero(bad))} net-slope variances "
                      "were nonpositive; floored")
        var = np.where(bad, var_floor, var)
    return net, var


def _fit_target(X_emb, y, tail_quantiles, solver_kwargs):
    """Median fit plus residual tail fits for one target series."""
    fits = {}
    median = QuantileRegressor(q=0.5, **solver_kwargs).fit(X_emb, y)
    fits[0.5] = median
    resid = residual_shift(y, median.predict(X_emb))
    for q in tail_quantiles:
        fits[q] = QuantileRegressor(q=q, **solver_kwargs).fit(X_emb, resid)
    return fits, resid


class PiecewiseQuantileVAR(BaseEstimator):
    """Fits the nine-network piecewise quantile VAR(1).

    Attributes (after fit)
    ----------
    coef_ : {(region, target): N x N} net-slope (tails) / raw (linear) matrices.
    tvals_ : matching Wald t-value matrices.
    intercepts_ : {target: length-N vector}.
    breakpoints_ : per-asset embedding knots.
    median_residuals_ : (T-1) x N residuals from the median fits.
    failed_targets_ : indices of assets whose fits were masked.
    """

    def __init__(self, tail_quantiles=(0.1, 0.9), breakpoint_quantiles=(0.1, 0.9),
                 max_iter=250, tol=1e-8, delta=1e-6, alpha_level=0.05,
                 f0_floor=1e-10, n_jobs=1):
        self.tail_quantiles = tail_quantiles
        self.breakpoint_quantiles = breakpoint_quantiles
        self.max_iter = max_iter
        self.tol = tol
        self.delta = delta
        self.alpha_level = alpha_level
        self.f0_floor = f0_floor
        self.n_jobs = n_jobs

    def _solver_kwargs(self):
        return dict(max_iter=self.max_iter, tol=self.tol, delta=self.delta,
                    alpha_level=self.alpha_level, f0_floor=self.f0_floor)

    def fit(self, returns, y=None):
        X = _as_matrix(returns)
        t_eff, n = X.shape[0] - LAG, X.shape[1]
        if t_eff <= 3 * n + 1:
            raise DataError(f"insufficient sample: need T-1 > 3N+1, got {t_eff} rows for N={n}")

        X_lag, Y = X[:-LAG], X[LAG:]
        emb = PiecewiseEmbedding(*self.breakpoint_quantiles).fit(X_lag)
        X_emb = emb.transform(X_lag)
        self.breakpoints_ = emb.breakpoints_

        def safe_fit(j):
            try:
                return _fit_target(X_emb, Y[:, j], self.tail_quantiles,
                                   self._solver_kwargs())
            except NumericalError as exc:
                return exc

        results = Parallel(n_jobs=self.n_jobs)(delayed(safe_fit)(j) for j in range(n))

        quantiles = (self.tail_quantiles[0], 0.5, self.tail_quantiles[1])
        labels = [target_label(q) for q in quantiles]
        self.coef_ = {(r, t): np.full((n, n), np.nan) for r in REGIONS for t in labels}
        self.tvals_ = {(r, t): np.full((n, n), np.nan) for r in REGIONS for t in labels}
        self.intercepts_ = {t: np.full(n, np.nan) for t in labels}
        self.median_residuals_ = np.full((t_eff, n), np.nan)
        self.failed_targets_ = []

        for j, res in enumerate(results):
            if isinstance(res, Exception):
                warnings.warn(f"fit failed for asset column {j}: {res}; column masked")
                self.failed_targets_.append(j)
                continue
            fits, resid = res
            self.median_residuals_[:, j] = resid
            for q, label in zip(quantiles, labels):
                self._assemble_column(j, fits[q], label, n)

        if len(self.failed_targets_) == n:
            raise NumericalError("every per-asset fit failed; see warnings")
        self.n_assets_ = n
        self.target_quantiles_ = quantiles
        return self

    def _assemble_column(self, j, fit, label, n):
        alpha, cov = fit.coef_, fit.cov_
        self.intercepts_[label][j] = fit.intercept_
        # coefficient k lives at cov index k+1 (intercept first)
        lo, li, up = 3 * np.arange(n), 3 * np.arange(n) + 1, 3 * np.arange(n) + 2
        lin_var = cov[li + 1, li + 1]
        self.coef_[("linear", label)][:, j] = alpha[li]
        self.tvals_[("linear", label)][:, j] = alpha[li] / np.sqrt(lin_var)
        for region, idx in (("lower", lo), ("upper", up)):
            pair_cov = np.empty((n, 2, 2))
            pair_cov[:, 0, 0] = cov[idx + 1, idx + 1]
            pair_cov[:, 1, 1] = lin_var
            pair_cov[:, 0, 1] = pair_cov[:, 1, 0] = cov[idx + 1, li + 1]
            net, var = net_slope(alpha[idx], alpha[li], pair_cov,
                                 var_floor=self.f0_floor**2)
            self.coef_[(region, label)][:, j] = net
            self.tvals_[(region, label)][:, j] = net / np.sqrt(var)

    def raw_coefficient_vector(self, label: str, j: int) -> np.ndarray:
        """Per-fit 3N coefficient vector (partial slopes) for target asset j."""
        check_is_fitted(self, "coef_")
        n = self.n_assets_
        out = np.empty(3 * n)
        lin = self.coef_[("linear", label)][:, j]
        out[1::3] = lin
        out[0::3] = self.coef_[("lower", label)][:, j] - lin
        out[2::3] = self.coef_[("upper", label)][:, j] - lin
        return out

    def predict_quantiles(self, lagged) -> dict:
        """Predicted target quantiles for rows of lagged returns.

        Tail predictions recompose as median fit + residual-quantile fit.
        """
        check_is_fitted(self, "coef_")
        from .embedding import embed
        lagged = np.atleast_2d(np.asarray(lagged, dtype=float))
        X_emb = embed(lagged, self.breakpoints_)
        n = self.n_assets_
        preds = {}
        for label in (target_label(q) for q in self.target_quantiles_):
            block = np.empty((lagged.shape[0], n))
            for j in range(n):
                block[:, j] = X_emb @ self.raw_coefficient_vector(label, j) \
                    + self.intercepts_[label][j]
            preds[label] = block
        median = preds["median"]
        for label in preds:
            if label != "median":
                preds[label] = median + preds[label]
        return preds


class StandardVAR(BaseEstimator):
    """Baseline VAR(1) on the raw lagged design.

    method='median' (default) fits per-asset median quantile regressions,
    matching how the comparison network is built; method='mls' is the
    closed-form multivariate least squares with Kronecker-form t-values.
    """

    def __init__(self, method="median", max_iter=250, tol=1e-8, delta=1e-6,
                 alpha_level=0.05, f0_floor=1e-10, n_jobs=1):
        self.method = method
        self.max_iter = max_iter
        self.tol = tol
        self.delta = delta
        self.alpha_level = alpha_level
        self.f0_floor = f0_floor
        self.n_jobs = n_jobs

    def fit(self, returns, y=None):
        X = _as_matrix(returns)
        t_eff, n = X.shape[0] - LAG, X.shape[1]
        if t_eff <= n + 1:
            raise DataError(f"insufficient sample: need T-1 > N+1, got {t_eff} rows for N={n}")
        X_lag, Y = X[:-LAG], X[LAG:]
        if self.method == "mls":
            self._fit_mls(X_lag, Y)
        elif self.method == "median":
            self._fit_median(X_lag, Y)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.n_assets_ = n
        return self

    def _fit_mls(self, X_lag, Y):
        t_eff, n = Y.shape
        W = np.column_stack([np.ones(t_eff), X_lag])
        gram = W.T @ W
        try:
            gram_inv = sla.inv(gram)
        except sla.LinAlgError as exc:
            raise NumericalError("singular Gram matrix in MLS fit") from exc
        B = gram_inv @ (W.T @ Y)
        resid = Y - W @ B
        dof = max(t_eff - (n + 1), 1)
        sigma = resid.T @ resid / dof
        se = np.sqrt(np.outer(np.diag(gram_inv)[1:], np.diag(sigma)))
        self.coef_ = B[1:, :].copy()          # source-row, target-column
        self.intercept_ = B[0, :].copy()
        self.tvals_ = self.coef_ / se
        self.Sigma_eps_ = sigma
        self.Gamma_ = X_lag.T @ X_lag / t_eff
        self.residuals_ = resid

    def _fit_median(self, X_lag, Y):
        n = Y.shape[1]
        kwargs = dict(max_iter=self.max_iter, tol=self.tol, delta=self.delta,
                      alpha_level=self.alpha_level, f0_floor=self.f0_floor)

        def fit_one(j):
            return QuantileRegressor(q=0.5, **kwargs).fit(X_lag, Y[:, j])

        fits = Parallel(n_jobs=self.n_jobs)(delayed(fit_one)(j) for j in range(n))
        self.coef_ = np.column_stack([f.coef_ for f in fits])
        self.intercept_ = np.array([f.intercept_ for f in fits])
        self.tvals_ = np.column_stack([f.t_values() for f in fits])
        self.residuals_ = np.column_stack([f.residuals_ for f in fits])
