"""Price panel loading, log-return computation, and the stabilizing transform.

Raw prices arrive as a CSV with a timestamp column and one column per asset.
Assets with any gap, nonpositive price, or missing market cap are dropped
with a warning rather than imputed.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DataError


@dataclass(frozen=True)
class Asset:
    id: str
    market_cap_usd: float


@dataclass(frozen=True)
class PricePanel:
    """Validated T x N panel of strictly positive prices."""

    timestamps: np.ndarray  # epoch seconds, strictly increasing, uniform
    prices: np.ndarray      # T x N, > 0, no gaps
    assets: list[Asset] = field(default_factory=list)

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    @property
    def n_obs(self) -> int:
        return self.prices.shape[0]


@dataclass(frozen=True)
class ReturnPanel:
    """(T-1) x N matrix of returns plus asset metadata."""

    returns: np.ndarray
    assets: list[Asset] = field(default_factory=list)
    transform_applied: bool = False

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    @property
    def n_obs(self) -> int:
        return self.returns.shape[0]

    @property
    def asset_ids(self) -> list[str]:
        return [a.id for a in self.assets]

    @property
    def caps(self) -> np.ndarray:
        return np.array([a.market_cap_usd for a in self.assets], dtype=float)


def _parse_timestamps(col: pd.Series) -> np.ndarray:
    """Accept epoch seconds or RFC-3339 strings; return epoch seconds."""
    try:
        numeric = pd.to_numeric(col, errors="raise")
        return numeric.to_numpy(dtype=float)
    except (ValueError, TypeError):
        pass
    try:
        parsed = pd.to_datetime(col, utc=True, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise DataError(f"cannot parse timestamp column: {exc}") from exc
    return parsed.astype("int64").to_numpy() / 1e9


def load_prices(path, caps_path) -> PricePanel:
    """Load and validate a price panel with a market-cap snapshot.

    Assets missing from the caps file, or with any missing/nonpositive
    price, are dropped with a warning.
    """
    try:
        raw = pd.read_csv(path)
        caps = pd.read_csv(caps_path)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    except Exception as exc:
        raise DataError(f"CSV parse failure: {exc}") from exc

    if raw.shape[1] < 2:
        raise DataError("price file needs a timestamp column plus asset columns")
    if {"id", "market_cap_usd"} - set(caps.columns):
        raise DataError("caps file must have columns id,market_cap_usd")

    timestamps = _parse_timestamps(raw.iloc[:, 0])
    if len(timestamps) < 3:
        raise DataError("fewer than 3 timestamps")
    steps = np.diff(timestamps)
    if np.any(steps <= 0):
        raise DataError("timestamps must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-6):
        raise DataError("timestamps must be uniformly spaced")

    cap_map = dict(zip(caps["id"].astype(str), caps["market_cap_usd"].astype(float)))
    # pandas silently renames repeated header fields, so check the raw header
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))[1:]
    if len(set(header)) != len(header):
        raise DataError("duplicate asset ids in price file")
    price_cols = list(raw.columns[1:])

    kept_ids, kept_cols = [], []
    for col in price_cols:
        series = pd.to_numeric(raw[col], errors="coerce").to_numpy(dtype=float)
        if col not in cap_map:
            warnings.warn(f"asset {col!r} dropped: no market cap entry")
            continue
        if np.any(~np.isfinite(series)) or np.any(series <= 0):
            warnings.warn(f"asset {col!r} dropped: missing or nonpositive prices")
            continue
        if cap_map[col] < 0:
            warnings.warn(f"asset {col!r} dropped: negative market cap")
            continue
        kept_ids.append(col)
        kept_cols.append(series)

    if len(kept_ids) < 2:
        raise DataError("fewer than 2 surviving assets")

    prices = np.column_stack(kept_cols)
    assets = [Asset(i, cap_map[i]) for i in kept_ids]
    return PricePanel(timestamps=timestamps, prices=prices, assets=assets)


def log_returns(panel: PricePanel) -> np.ndarray:
    """100 * log(p_t / p_{t-1}) per column; output has T-1 rows."""
    return 100.0 * np.diff(np.log(panel.prices), axis=0)


def stabilize(y):
    """sign(y) * log(|y| + 1); odd, strictly increasing, damps outliers."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DataError("stabilize requires finite input")
    return np.sign(y) * np.log1p(np.abs(y))


def returns_from_prices(panel: PricePanel, stabilized: bool = True) -> ReturnPanel:
    """Full transform: log-returns, optional stabilization, degeneracy check."""
    y = log_returns(panel)
    if stabilized:
        y = stabilize(y)
    variances = y.var(axis=0)
    keep = variances > 0
    if not np.all(keep):
        dropped = [panel.assets[j].id for j in np.flatnonzero(~keep)]
        warnings.warn(f"assets dropped for zero return variance: {dropped}")
    if keep.sum() < 2:
        raise DataError("fewer than 2 surviving assets after variance check")
    assets = [a for a, k in zip(panel.assets, keep) if k]
    return ReturnPanel(returns=y[:, keep], assets=assets, transform_applied=stabilized)
