"""Network construction and statistics on thresholded fits.

Thresholding keeps links whose Wald |t| exceeds the two-sided normal
critical value; the nine resulting layers feed degree statistics,
CCDF tables, capitalization correlations, the quantile influence
aggregate, and the all-effects multigraph.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .embedding import REGIONS
from .pqvar import TARGETS, PiecewiseQuantileVAR, StandardVAR

LAYER_ORDER = [(r, t) for t in TARGETS for r in REGIONS]

STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))


def critical_value(alpha: float) -> float:
    """Two-sided normal critical value for significance level alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    return float(stats.norm.ppf(1.0 - alpha / 2.0))


@dataclass(frozen=True)
class SubNetwork:
    region: str
    target: str
    adj: np.ndarray      # N x N binary, source-row target-column
    sign: np.ndarray     # {-1, 0, +1}, nonzero only where adj == 1
    t_vals: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.adj.shape[0]

    @property
    def label(self) -> str:
        return f"{self.region}->{self.target}"


@dataclass(frozen=True)
class CausalMultigraph:
    layers: list[SubNetwork]
    total_adj: np.ndarray            # integer multiplicities, 0..9
    median_composite: np.ndarray     # sum of the three median-target layers


def threshold(fit, alpha: float = 0.001) -> list[SubNetwork]:
    """Binary signed networks from a fitted model's t-value matrices.

    Accepts a PiecewiseQuantileVAR (nine layers) or StandardVAR (one
    layer, labelled linear->median). Masked (NaN) entries never link.
    """
    crit = critical_value(alpha)

    def one(region, target, tvals, coefs):
        with np.errstate(invalid="ignore"):
            adj = (np.abs(tvals) > crit) & np.isfinite(tvals)
        sign = np.where(adj, np.sign(coefs), 0.0).astype(int)
        return SubNetwork(region, target, adj.astype(int), sign, tvals)

    if isinstance(fit, PiecewiseQuantileVAR):
        return [one(r, t, fit.tvals_[(r, t)], fit.coef_[(r, t)])
                for r, t in LAYER_ORDER]
    if isinstance(fit, StandardVAR):
        return [one("linear", "median", fit.tvals_, fit.coef_)]
    raise TypeError(f"unsupported fit type {type(fit).__name__}")


def split_self_cross(net: SubNetwork):
    """Partition links into self (diagonal) and cross (off-diagonal) sets."""
    idx = np.argwhere(net.adj == 1)
    self_links = [(i, j) for i, j in idx if i == j]
    cross_links = [(i, j) for i, j in idx if i != j]
    return self_links, cross_links


def spearman(x, y):
    """Tie-adjusted Spearman rho with a Student-t p-value.

    Returns (nan, nan) with a warning when either input is constant.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 3:
        raise ValueError("need equal-length inputs with at least 3 entries")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        warnings.warn("spearman undefined for constant input")
        return float("nan"), float("nan")
    rho = float(np.corrcoef(rx, ry)[0, 1])
    n = x.size
    if abs(rho) >= 1.0:
        return float(np.sign(rho)), 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho**2))
    p = 2.0 * float(stats.t.sf(abs(t), df=n - 2))
    return rho, p


def significance_stars(p: float) -> str:
    if not np.isfinite(p):
        return ""
    for level, stars in STAR_LEVELS:
        if p <= level:
            return stars
    return ""


def p_down(adj, caps):
    """Fraction of cross links whose source outranks the target in cap.

    Ties contribute 0.5; returns nan when there are no cross links.
    """
    adj = np.asarray(adj)
    caps = np.asarray(caps, dtype=float)
    src, tgt = np.nonzero(adj)
    keep = src != tgt
    src, tgt = src[keep], tgt[keep]
    weights = adj[src, tgt].astype(float)  # multigraph multiplicities count
    if weights.sum() == 0:
        return float("nan")
    down = np.where(caps[src] > caps[tgt], 1.0,
                    np.where(caps[src] == caps[tgt], 0.5, 0.0))
    return float(np.sum(down * weights) / weights.sum())


def degree_stats(adj, caps, scale: float = 1.0) -> dict:
    """Table-row statistics for one adjacency (works on multigraphs too)."""
    adj = np.asarray(adj, dtype=float)
    out_deg = adj.sum(axis=1) / scale
    in_deg = adj.sum(axis=0) / scale
    if np.ptp(out_deg) > 0:
        rho_out, p_out = spearman(out_deg, caps)
    else:
        rho_out, p_out = float("nan"), float("nan")
    if np.ptp(in_deg) > 0:
        rho_in, p_in = spearman(in_deg, caps)
    else:
        rho_in, p_in = float("nan"), float("nan")
    return {
        "mean_degree": float(out_deg.mean()),
        "sigma_out": float(out_deg.std()),
        "sigma_in": float(in_deg.std()),
        "rho_out": rho_out, "p_out": p_out, "stars_out": significance_stars(p_out),
        "rho_in": rho_in, "p_in": p_in, "stars_in": significance_stars(p_in),
        "p_down": p_down(adj, caps),
    }


def ccdf(degrees):
    """Survival table [(k, P(degree >= k))] over 0..max observed degree."""
    degrees = np.asarray(degrees, dtype=float)
    top = int(degrees.max()) if degrees.size else 0
    return [(k, float(np.mean(degrees >= k))) for k in range(top + 1)]


def qig_aggregate(layers: list[SubNetwork]) -> dict:
    """Quantile-influence summary: per-layer link proportions and sign
    propensities, split by self/cross strata, plus 6-node weights.

    Node weights average each region's outgoing (and each target's
    incoming) edge weights over edge types. Sign propensity is None
    where a stratum has no links.
    """
    n = layers[0].n_nodes
    eye = np.eye(n, dtype=bool)
    strata = {"self": eye, "cross": ~eye}
    possible = {"self": n, "cross": n * (n - 1)}

    edges = {}
    for net in layers:
        for name, mask in strata.items():
            links = int(net.adj[mask].sum())
            positive = int((net.sign[mask] > 0).sum())
            edges[(net.region, net.target, name)] = {
                "links": links,
                "proportion": links / possible[name],
                "positive_propensity": positive / links if links else None,
            }

    nodes = {}
    for name in strata:
        for region in REGIONS:
            weights = [edges[(region, t, name)]["proportion"] for t in TARGETS]
            nodes[(f"in:{region}", name)] = float(np.mean(weights))
        for target in TARGETS:
            weights = [edges[(r, target, name)]["proportion"] for r in REGIONS]
            nodes[(f"out:{target}", name)] = float(np.mean(weights))
    return {"edges": edges, "nodes": nodes}


def build_multigraph(layers: list[SubNetwork]) -> CausalMultigraph:
    """Integer-summed all-effects multigraph plus the 3-layer median composite."""
    if len(layers) != 9:
        raise ValueError(f"expected 9 layers, got {len(layers)}")
    total = np.sum([net.adj for net in layers], axis=0)
    median = np.sum([net.adj for net in layers if net.target == "median"], axis=0)
    return CausalMultigraph(layers=list(layers), total_adj=total,
                            median_composite=median)


def degree_correlation_matrix(layers: list[SubNetwork], p_max: float = 0.05):
    """Spearman rho between every (direction, layer) degree-sequence pair.

    Returns (labels, 18x18 matrix) with entries failing p <= p_max set
    to nan. Constant degree sequences are likewise nan.
    """
    labels, seqs = [], []
    for net in layers:
        labels.append(f"out:{net.label}")
        seqs.append(net.adj.sum(axis=1))
        labels.append(f"in:{net.label}")
        seqs.append(net.adj.sum(axis=0))
    m = len(seqs)
    out = np.full((m, m), np.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for a in range(m):
            for b in range(a, m):
                if a == b:
                    out[a, a] = 1.0 if np.ptp(seqs[a]) > 0 else np.nan
                    continue
                rho, p = spearman(seqs[a], seqs[b])
                if np.isfinite(p) and p <= p_max:
                    out[a, b] = out[b, a] = rho
    return labels, out
