"""Analysis report: network statistics, tables, and graph exports.

Consumes a fit artifact and writes a report directory with the summary
JSON, per-layer statistics CSVs, CCDF tables, edge lists, DOT/GraphML
exports for each layer and the quantile-influence aggregate, and
fitted-effects curves over a grid of lagged values.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import networkx as nx
import numpy as np

from . import netstats
from .artifact import dump_json, restore_fits
from .embedding import REGIONS
from .errors import ArtifactError
from .netstats import SubNetwork
from .pqvar import TARGETS

EFFECT_GRID_POINTS = 41

REQUIRED_FILES = (
    "report.json", "layer_stats.csv", "model_comparison.csv", "ccdf.csv",
    "edges.csv", "degree_correlations.csv", "fitted_effects.csv",
    "qig_self.dot", "qig_cross.dot", "qig_self.graphml", "qig_cross.graphml",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and not np.isfinite(value):
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _layer_graph(net: SubNetwork, asset_ids):
    g = nx.DiGraph()
    g.add_nodes_from(asset_ids)
    for i, j in np.argwhere(net.adj == 1):
        g.add_edge(asset_ids[i], asset_ids[j],
                   sign=int(net.sign[i, j]), t_value=float(net.t_vals[i, j]))
    return g


def _write_dot(path, nodes, edges):
    """Minimal deterministic DOT writer; edges carry attribute dicts."""
    lines = ["digraph G {"]
    for node in nodes:
        lines.append(f'  "{node}";')
    for src, dst, attrs in edges:
        attr_txt = ", ".join(f'{k}="{v}"' for k, v in attrs.items())
        lines.append(f'  "{src}" -> "{dst}" [{attr_txt}];')
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")


def _qig_exports(out_dir, qig):
    nodes = [f"in:{r}" for r in REGIONS] + [f"out:{t}" for t in TARGETS]
    for stratum in ("self", "cross"):
        edges = []
        g = nx.DiGraph()
        g.add_nodes_from(nodes)
        for region in REGIONS:
            for target in TARGETS:
                cell = qig["edges"][(region, target, stratum)]
                if cell["links"] == 0:
                    continue
                prop = cell["positive_propensity"]
                attrs = {"weight": repr(cell["proportion"]),
                         "sign_propensity": "" if prop is None else repr(prop)}
                edges.append((f"in:{region}", f"out:{target}", attrs))
                g.add_edge(f"in:{region}", f"out:{target}",
                           weight=cell["proportion"],
                           sign_propensity=-1.0 if prop is None else prop)
        _write_dot(out_dir / f"qig_{stratum}.dot", nodes, edges)
        nx.write_graphml(g, out_dir / f"qig_{stratum}.graphml")


def _fitted_effects_rows(pq, artifact):
    asset_ids = [a["id"] for a in artifact["assets"]]
    lo = np.asarray(artifact["return_min"], dtype=float)
    hi = np.asarray(artifact["return_max"], dtype=float)
    n = len(asset_ids)
    for i in range(n):
        grid = np.linspace(lo[i], hi[i], EFFECT_GRID_POINTS)
        lagged = np.zeros((EFFECT_GRID_POINTS, n))
        lagged[:, i] = grid
        preds = pq.predict_quantiles(lagged)
        for j in range(n):
            for k, x in enumerate(grid):
                yield (asset_ids[i], asset_ids[j], x,
                       preds["q10"][k, j], preds["median"][k, j],
                       preds["q90"][k, j])


def _qig_json(qig):
    edges = {f"{r}->{t}|{s}": v for (r, t, s), v in qig["edges"].items()}
    nodes = {f"{name}|{s}": v for (name, s), v in qig["nodes"].items()}
    return {"edges": edges, "nodes": nodes}


def analyze_artifact(artifact: dict, out_dir, alpha: float | None = None) -> dict:
    """Compute every reported statistic and write the report directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pq, sv = restore_fits(artifact)
    if alpha is None:
        alpha = artifact["config"]["alpha"]
    caps = np.array([a["market_cap_usd"] for a in artifact["assets"]], dtype=float)
    asset_ids = [a["id"] for a in artifact["assets"]]

    layers = netstats.threshold(pq, alpha)
    svar_net = netstats.threshold(sv, alpha)[0]
    multigraph = netstats.build_multigraph(layers)
    qig = netstats.qig_aggregate(layers)

    layer_rows = []
    report_layers = {}
    for net in layers:
        stats_row = netstats.degree_stats(net.adj, caps)
        report_layers[net.label] = stats_row
        layer_rows.append([net.label, stats_row["mean_degree"],
                           stats_row["sigma_out"], stats_row["sigma_in"],
                           stats_row["rho_out"], stats_row["stars_out"],
                           stats_row["rho_in"], stats_row["stars_in"],
                           stats_row["p_down"]])
    _write_csv(out_dir / "layer_stats.csv",
               ["layer", "mean_degree", "sigma_out", "sigma_in",
                "rho_out", "stars_out", "rho_in", "stars_in", "p_down"],
               layer_rows)

    comparisons = {
        "multigraph": netstats.degree_stats(multigraph.total_adj, caps, scale=9.0),
        "standard_var": netstats.degree_stats(svar_net.adj, caps),
        "piecewise_median": netstats.degree_stats(multigraph.median_composite,
                                                  caps, scale=3.0),
    }
    comparisons["multigraph_raw"] = netstats.degree_stats(multigraph.total_adj, caps)
    comparisons["piecewise_median_raw"] = netstats.degree_stats(
        multigraph.median_composite, caps)
    _write_csv(out_dir / "model_comparison.csv",
               ["model", "mean_degree", "sigma_out", "sigma_in",
                "rho_out", "stars_out", "rho_in", "stars_in", "p_down"],
               [[name, row["mean_degree"], row["sigma_out"], row["sigma_in"],
                 row["rho_out"], row["stars_out"], row["rho_in"],
                 row["stars_in"], row["p_down"]]
                for name, row in comparisons.items()])

    ccdf_rows = []
    named = [(net.label, net.adj) for net in layers]
    named += [("multigraph", multigraph.total_adj), ("standard_var", svar_net.adj),
              ("piecewise_median", multigraph.median_composite)]
    for label, adj in named:
        for direction, axis in (("out", 1), ("in", 0)):
            for k, surv in netstats.ccdf(np.asarray(adj).sum(axis=axis)):
                ccdf_rows.append([label, direction, k, surv])
    _write_csv(out_dir / "ccdf.csv", ["layer", "direction", "degree", "survival"],
               ccdf_rows)

    edge_rows = []
    for label, net in [(n.label, n) for n in layers] + [("standard_var", svar_net)]:
        for i, j in np.argwhere(net.adj == 1):
            edge_rows.append([asset_ids[i], asset_ids[j], label,
                              int(net.sign[i, j]), float(net.t_vals[i, j])])
    _write_csv(out_dir / "edges.csv",
               ["source", "target", "layer", "sign", "t_value"], edge_rows)

    corr_labels, corr = netstats.degree_correlation_matrix(layers)
    _write_csv(out_dir / "degree_correlations.csv", [""] + corr_labels,
               [[corr_labels[a]] + [corr[a, b] for b in range(len(corr_labels))]
                for a in range(len(corr_labels))])

    layers_dir = out_dir / "layers"
    layers_dir.mkdir(exist_ok=True)
    for label, net in [(n.label, n) for n in layers] + [("standard_var", svar_net)]:
        stem = label.replace("->", "_")
        g = _layer_graph(net, asset_ids)
        nx.write_graphml(g, layers_dir / f"{stem}.graphml")
        _write_dot(layers_dir / f"{stem}.dot", asset_ids,
                   [(u, v, {"sign": d["sign"], "t_value": repr(d["t_value"])})
                    for u, v, d in g.edges(data=True)])

    _qig_exports(out_dir, qig)

    _write_csv(out_dir / "fitted_effects.csv",
               ["source", "target", "lagged_value", "q10", "median", "q90"],
               _fitted_effects_rows(pq, artifact))

    report = {
        "alpha": alpha,
        "critical_value": netstats.critical_value(alpha),
        "fingerprint": artifact["fingerprint"],
        "n_assets": len(asset_ids),
        "layers": report_layers,
        "model_comparison": comparisons,
        "qig": _qig_json(qig),
        "link_counts": {net.label: int(net.adj.sum()) for net in layers},
        "standard_var_links": int(svar_net.adj.sum()),
        "multigraph_links": int(multigraph.total_adj.sum()),
    }
    dump_json(report, out_dir / "report.json")
    validate_report_dir(out_dir)
    return report


def validate_report_dir(out_dir):
    """Schema checks on an emitted report directory; raises ArtifactError."""
    out_dir = Path(out_dir)
    for name in REQUIRED_FILES:
        if not (out_dir / name).exists():
            raise ArtifactError(f"report output missing {name}")
    try:
        json.loads((out_dir / "report.json").read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"report.json is not valid JSON: {exc}") from exc
    with open(out_dir / "ccdf.csv", newline="") as fh:
        reader = csv.DictReader(fh)
        last = {}
        for row in reader:
            key = (row["layer"], row["direction"])
            surv = float(row["survival"])
            if key in last and surv > last[key] + 1e-12:
                raise ArtifactError(f"CCDF not monotone for {key}")
            last[key] = surv
