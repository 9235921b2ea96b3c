"""Synthetic return panels with planted causal archetypes.

Generators cover the calibration catalog: white noise, linear VAR,
GARCH-like volatility feedback, lag-modulated skew, and one-sided
threshold response. Each carries a planted-edge truth set for
precision/recall scoring of recovered networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .ingest import Asset, ReturnPanel

KINDS = ("white-noise", "linear-var", "garch-like", "skew-ar", "asymmetric")

BURN_IN = 500  # discarded steps to wash out initial conditions


@dataclass(frozen=True)
class ArchetypeSpec:
    kind: str
    n_assets: int
    n_steps: int
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown archetype kind {self.kind!r}")
        if self.n_assets < 1 or self.n_steps < 10:
            raise DataError("need n_assets >= 1 and n_steps >= 10")


def _innovations(rng, shape, params):
    df = params.get("t_df")
    if df is None:
        return rng.standard_normal(shape)
    if df <= 2:
        raise DataError("heavy-tail innovations need t_df > 2")
    scale = np.sqrt(df / (df - 2.0))  # unit variance
    return rng.standard_t(df, size=shape) / scale


def _planted_matrix(spec: ArchetypeSpec) -> np.ndarray:
    n = spec.n_assets
    A = spec.params.get("A")
    if A is not None:
        A = np.asarray(A, dtype=float)
        if A.shape != (n, n):
            raise DataError(f"planted matrix must be {n}x{n}")
        return A
    A = np.eye(n) * spec.params.get("diag", -0.3)
    cross = spec.params.get("cross")
    if cross and n > 1:
        A[0, 1] = cross  # one planted cross effect, asset 0 -> asset 1
    return A


def generate(spec: ArchetypeSpec) -> ReturnPanel:
    """Reproducible panel for the given archetype; burn-in discarded."""
    rng = np.random.default_rng(spec.seed)
    total = spec.n_steps + BURN_IN
    n = spec.n_assets
    p = spec.params

    if spec.kind == "white-noise":
        y = _innovations(rng, (total, n), p)

    elif spec.kind == "linear-var":
        A = _planted_matrix(spec)
        if np.max(np.abs(np.linalg.eigvals(A))) >= 1.0:
            raise DataError("non-stationary spec: spectral radius of A must be < 1")
        eps = _innovations(rng, (total, n), p)
        y = np.zeros((total, n))
        for t in range(1, total):
            # source-row convention: y_t[j] = sum_i A[i, j] * y_{t-1}[i]
            y[t] = y[t - 1] @ A + eps[t]

    elif spec.kind == "garch-like":
        a = p.get("arch", 0.15)
        b = p.get("garch", 0.8)
        if a < 0 or b < 0 or a + b >= 1.0:
            raise DataError("non-stationary spec: need arch + garch < 1, both >= 0")
        omega = p.get("omega", 1.0 - a - b)  # unit unconditional variance
        z = _innovations(rng, (total, n), p)
        y = np.zeros((total, n))
        sig2 = np.full(n, omega / (1.0 - a - b))
        for t in range(1, total):
            sig2 = omega + a * y[t - 1] ** 2 + b * sig2
            y[t] = np.sqrt(sig2) * z[t]

    elif spec.kind == "skew-ar":
        s = p.get("skew_shift", 0.8)
        z1 = np.abs(_innovations(rng, (total, n), p))
        z2 = _innovations(rng, (total, n), p)
        y = np.zeros((total, n))
        for t in range(1, total):
            # lagged return steers the skew direction of the shock
            a_t = np.clip(s * y[t - 1], -20.0, 20.0)
            delta = a_t / np.sqrt(1.0 + a_t**2)
            y[t] = delta * z1[t] + np.sqrt(1.0 - delta**2) * z2[t]

    elif spec.kind == "asymmetric":
        s = p.get("slope", 0.5)
        thresh = p.get("threshold", 1.0)
        eps = _innovations(rng, (total, n), p)
        y = np.zeros((total, n))
        for t in range(1, total):
            y[t] = eps[t] + s * np.maximum(y[t - 1] - thresh, 0.0)

    caps = p.get("caps")
    if caps is None:
        caps = [1e9 / (j + 1) for j in range(n)]
    assets = [Asset(f"asset{j:03d}", float(caps[j])) for j in range(n)]
    return ReturnPanel(returns=y[BURN_IN:], assets=assets, transform_applied=False)


def planted_edges(spec: ArchetypeSpec) -> set:
    """Truth set of (source, target, region, target_quantile, sign) tuples."""
    edges = set()
    if spec.kind == "linear-var":
        A = _planted_matrix(spec)
        for i, j in zip(*np.nonzero(A)):
            sign = int(np.sign(A[i, j]))
            for region in ("lower", "linear", "upper"):
                edges.add((int(i), int(j), region, "median", sign))
    elif spec.kind == "garch-like":
        for j in range(spec.n_assets):
            edges.add((j, j, "upper", "q90", 1))
            edges.add((j, j, "lower", "q10", 1))
    elif spec.kind == "skew-ar":
        for j in range(spec.n_assets):
            for region in ("lower", "linear", "upper"):
                edges.add((j, j, region, "q90", 1))
                edges.add((j, j, region, "q10", 1))
    elif spec.kind == "asymmetric":
        for j in range(spec.n_assets):
            edges.add((j, j, "upper", "q90", 1))
            edges.add((j, j, "upper", "median", 1))
            edges.add((j, j, "upper", "q10", 1))
    return edges


def recovered_edges(layers) -> set:
    """Edge tuples present in thresholded layers, matching planted format."""
    out = set()
    for net in layers:
        for i, j in np.argwhere(net.adj == 1):
            out.add((int(i), int(j), net.region, net.target, int(net.sign[i, j])))
    return out


def score_recovery(planted: set, layers) -> dict:
    """Per-layer and pooled precision/recall with exact edge matching.

    Precision is None where nothing was recovered in a layer.
    """
    recovered = recovered_edges(layers)
    per_layer = {}
    for net in layers:
        key = (net.region, net.target)
        p_layer = {e for e in planted if (e[2], e[3]) == key}
        r_layer = {e for e in recovered if (e[2], e[3]) == key}
        hits = len(p_layer & r_layer)
        per_layer[net.label] = {
            "precision": hits / len(r_layer) if r_layer else None,
            "recall": hits / len(p_layer) if p_layer else None,
        }
    hits = len(planted & recovered)
    pooled = {
        "precision": hits / len(recovered) if recovered else None,
        "recall": hits / len(planted) if planted else None,
    }
    return {"per_layer": per_layer, "pooled": pooled}
