"""3-knot piecewise-linear covariate expansion.

Each input series x is replaced by the block {x_minus, x, x_plus} with
    x_minus = min(0, x - lower)    x_plus = max(0, x - upper)
where (lower, upper) are the unconditional 0.1/0.9 quantiles of that
series. Blocks are ordered per asset with fixed region order
(lower, linear, upper) so coefficient vectors slice cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DataError
from .ingest import ReturnPanel

REGIONS = ("lower", "linear", "upper")


@dataclass(frozen=True)
class Breakpoints:
    lower: np.ndarray  # per-asset Q(0.1)
    upper: np.ndarray  # per-asset Q(0.9)

    def __post_init__(self):
        if np.any(self.lower >= self.upper):
            bad = np.flatnonzero(self.lower >= self.upper).tolist()
            raise DataError(f"degenerate breakpoints (lower >= upper) for columns {bad}")


def _as_matrix(returns) -> np.ndarray:
    if isinstance(returns, ReturnPanel):
        return returns.returns
    return check_array(np.asarray(returns, dtype=float))


def compute_breakpoints(returns, lower_q: float = 0.1, upper_q: float = 0.9) -> Breakpoints:
    """Per-column empirical quantiles via linear order-statistic interpolation."""
    X = _as_matrix(returns)
    if X.shape[0] < 10:
        raise DataError("need at least 10 observations per column for breakpoints")
    if not 0.0 < lower_q < upper_q < 1.0:
        raise ValueError("breakpoint quantiles must satisfy 0 < lower < upper < 1")
    lower = np.quantile(X, lower_q, axis=0, method="linear")
    upper = np.quantile(X, upper_q, axis=0, method="linear")
    return Breakpoints(lower=lower, upper=upper)


def embed(returns, bp: Breakpoints) -> np.ndarray:
    """Expand T x N returns into the T x 3N piecewise design."""
    X = _as_matrix(returns)
    n = X.shape[1]
    if bp.lower.shape[0] != n:
        raise ValueError("breakpoint/panel dimension mismatch")
    out = np.empty((X.shape[0], 3 * n))
    out[:, 0::3] = np.minimum(0.0, X - bp.lower)
    out[:, 1::3] = X
    out[:, 2::3] = np.maximum(0.0, X - bp.upper)
    return out


def column_labels(asset_ids) -> list[tuple[str, str]]:
    """(asset, region) tag for each embedded column, in column order."""
    return [(aid, region) for aid in asset_ids for region in REGIONS]


class PiecewiseEmbedding(BaseEstimator, TransformerMixin):
    """Transformer wrapping breakpoint estimation and the tail expansion.

    fit() computes per-column breakpoints on the training panel;
    transform() produces the T x 3N block design.
    """

    def __init__(self, lower_q=0.1, upper_q=0.9):
        self.lower_q = lower_q
        self.upper_q = upper_q

    def fit(self, X, y=None):
        self.breakpoints_ = compute_breakpoints(X, self.lower_q, self.upper_q)
        self.n_features_in_ = _as_matrix(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "breakpoints_")
        return embed(X, self.breakpoints_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "breakpoints_")
        if input_features is None:
            input_features = [f"x{j}" for j in range(self.n_features_in_)]
        return np.array([f"{a}__{r}" for a, r in column_labels(input_features)])
