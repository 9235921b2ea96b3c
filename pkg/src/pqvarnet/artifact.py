"""Fit artifact serialization.

A single versioned JSON file carries everything `analyze` needs: the
nine coefficient/t-value matrices, intercepts, breakpoints, baseline
VAR, asset metadata, and a config fingerprint. Reruns on identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .embedding import REGIONS, Breakpoints
from .ingest import ReturnPanel
from .pqvar import TARGETS, PiecewiseQuantileVAR, StandardVAR

FORMAT_TAG = "pqvarnet-artifact-v1"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def dump_json(obj, path):
    Path(path).write_text(
        json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def config_fingerprint(config: dict) -> str:
    canonical = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def build_artifact(pq: PiecewiseQuantileVAR, sv: StandardVAR,
                   panel: ReturnPanel, config: dict) -> dict:
    layer_key = lambda r, t: f"{r}->{t}"
    return {
        "format": FORMAT_TAG,
        "config": config,
        "fingerprint": config_fingerprint(config),
        "assets": [{"id": a.id, "market_cap_usd": a.market_cap_usd}
                   for a in panel.assets],
        "return_min": panel.returns.min(axis=0),
        "return_max": panel.returns.max(axis=0),
        "breakpoints": {"lower": pq.breakpoints_.lower,
                        "upper": pq.breakpoints_.upper},
        "pqvar": {
            "coef": {layer_key(r, t): pq.coef_[(r, t)] for r in REGIONS for t in TARGETS},
            "tvals": {layer_key(r, t): pq.tvals_[(r, t)] for r in REGIONS for t in TARGETS},
            "intercepts": {t: pq.intercepts_[t] for t in TARGETS},
            "failed_targets": pq.failed_targets_,
            "tail_quantiles": list(pq.tail_quantiles),
        },
        "standard_var": {
            "method": sv.method,
            "coef": sv.coef_,
            "tvals": sv.tvals_,
            "intercept": sv.intercept_,
        },
    }


def write_artifact(artifact: dict, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "artifact.json"
    dump_json(artifact, path)
    return path


def load_artifact(path) -> dict:
    from .errors import ArtifactError
    path = Path(path)
    if path.is_dir():
        path = path / "artifact.json"
    if not path.exists():
        raise ArtifactError(f"no artifact found at {path}")
    try:
        artifact = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"corrupt artifact: {exc}") from exc
    if artifact.get("format") != FORMAT_TAG:
        raise ArtifactError(
            f"incompatible artifact format {artifact.get('format')!r}; "
            f"expected {FORMAT_TAG!r}")
    return artifact


def restore_fits(artifact: dict):
    """Rebuild fitted estimator objects from a loaded artifact."""
    pq_part = artifact["pqvar"]
    tails = tuple(pq_part["tail_quantiles"])
    pq = PiecewiseQuantileVAR(tail_quantiles=tails)
    pq.coef_ = {}
    pq.tvals_ = {}
    for r in REGIONS:
        for t in TARGETS:
            pq.coef_[(r, t)] = np.asarray(pq_part["coef"][f"{r}->{t}"], dtype=float)
            pq.tvals_[(r, t)] = np.asarray(pq_part["tvals"][f"{r}->{t}"], dtype=float)
    pq.intercepts_ = {t: np.asarray(v, dtype=float)
                      for t, v in pq_part["intercepts"].items()}
    pq.breakpoints_ = Breakpoints(
        lower=np.asarray(artifact["breakpoints"]["lower"], dtype=float),
        upper=np.asarray(artifact["breakpoints"]["upper"], dtype=float))
    pq.failed_targets_ = list(pq_part["failed_targets"])
    pq.n_assets_ = len(artifact["assets"])
    pq.target_quantiles_ = (tails[0], 0.5, tails[1])

    sv_part = artifact["standard_var"]
    sv = StandardVAR(method=sv_part["method"])
    sv.coef_ = np.asarray(sv_part["coef"], dtype=float)
    sv.tvals_ = np.asarray(sv_part["tvals"], dtype=float)
    sv.intercept_ = np.asarray(sv_part["intercept"], dtype=float)
    sv.n_assets_ = pq.n_assets_
    return pq, sv
