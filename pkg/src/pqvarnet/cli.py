"""Command-line entry point for batch runs.

Subcommands:
  fit      estimate the piecewise quantile VAR and baseline VAR, write artifact
  analyze  compute network statistics and exports from an artifact
  synth    generate a synthetic panel with planted causal structure

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import artifact as artifact_mod
from . import ingest, synth
from .errors import ArtifactError, DataError, NumericalError
from .pqvar import PiecewiseQuantileVAR, StandardVAR
from .report import analyze_artifact

FIT_DEFAULTS = {
    "alpha": 0.001,
    "tail_quantiles": [0.1, 0.9],
    "breakpoint_quantiles": [0.1, 0.9],
    "stabilize": True,
    "max_iter": 250,
    "tol": 1e-8,
    "delta": 1e-6,
    "alpha_level": 0.05,
    "f0_floor": 1e-10,
    "baseline_method": "median",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pqvarnet")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit models and write an artifact")
    fit.add_argument("--prices", required=True, help="prices CSV (timestamp first)")
    fit.add_argument("--caps", required=True, help="caps CSV: id,market_cap_usd")
    fit.add_argument("--out", required=True, help="artifact output directory")
    fit.add_argument("--config", help="optional JSON config file; flags win")
    fit.add_argument("--alpha", type=float)
    fit.add_argument("--breakpoints", type=float, nargs=2, metavar=("LOW", "HIGH"))
    fit.add_argument("--no-stabilize", action="store_true",
                     help="skip the log(|y|+1) damping transform")
    fit.add_argument("--max-iter", type=int)
    fit.add_argument("--baseline-method", choices=["median", "mls"])
    fit.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    analyze = sub.add_parser("analyze", help="run network analysis on an artifact")
    analyze.add_argument("--artifact", required=True)
    analyze.add_argument("--out", required=True, help="report output directory")
    analyze.add_argument("--alpha", type=float,
                         help="override the significance level stored at fit time")

    syn = sub.add_parser("synth", help="generate a synthetic panel")
    syn.add_argument("--kind", required=True, choices=list(synth.KINDS))
    syn.add_argument("--n", type=int, required=True, help="asset count")
    syn.add_argument("--t", type=int, required=True, help="panel length")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--params", help="JSON dict of kind-specific parameters")
    syn.add_argument("--out", required=True)
    return parser


def _resolve_fit_config(args) -> dict:
    config = dict(FIT_DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise DataError(f"config file not found: {path}")
        config.update(json.loads(path.read_text()))
    if args.alpha is not None:
        config["alpha"] = args.alpha
    if args.breakpoints is not None:
        config["breakpoint_quantiles"] = list(args.breakpoints)
    if args.no_stabilize:
        config["stabilize"] = False
    if args.max_iter is not None:
        config["max_iter"] = args.max_iter
    if args.baseline_method is not None:
        config["baseline_method"] = args.baseline_method
    return config


def cmd_fit(args) -> int:
    config = _resolve_fit_config(args)
    panel = ingest.load_prices(args.prices, args.caps)
    returns = ingest.returns_from_prices(panel, stabilized=config["stabilize"])
    solver = dict(max_iter=config["max_iter"], tol=config["tol"],
                  delta=config["delta"], alpha_level=config["alpha_level"],
                  f0_floor=config["f0_floor"])
    pq = PiecewiseQuantileVAR(
        tail_quantiles=tuple(config["tail_quantiles"]),
        breakpoint_quantiles=tuple(config["breakpoint_quantiles"]),
        n_jobs=args.jobs, **solver).fit(returns)
    sv = StandardVAR(method=config["baseline_method"],
                     n_jobs=args.jobs, **solver).fit(returns)
    payload = artifact_mod.build_artifact(pq, sv, returns, config)
    path = artifact_mod.write_artifact(payload, args.out)
    print(f"artifact written to {path}")
    return 0


def cmd_analyze(args) -> int:
    payload = artifact_mod.load_artifact(args.artifact)
    report = analyze_artifact(payload, args.out, alpha=args.alpha)
    print(f"report written to {args.out} "
          f"({report['multigraph_links']} multigraph links)")
    return 0


def cmd_synth(args) -> int:
    params = json.loads(args.params) if args.params else {}
    spec = synth.ArchetypeSpec(kind=args.kind, n_assets=args.n,
                               n_steps=args.t, params=params, seed=args.seed)
    panel = synth.generate(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_panel_csv(panel, out_dir / "prices.csv", out_dir / "caps.csv")
    truth = sorted(synth.planted_edges(spec))
    artifact_mod.dump_json(
        {"kind": spec.kind, "seed": spec.seed, "params": params,
         "edges": [list(e) for e in truth]},
        out_dir / "planted_edges.json")
    print(f"synthetic panel written to {out_dir}")
    return 0


def write_panel_csv(panel: ingest.ReturnPanel, prices_path, caps_path,
                    start_price: float = 100.0, start_ts: int = 1_600_000_000,
                    step_s: int = 3600):
    """Emit a ReturnPanel in the price-CSV schema `fit` consumes.

    Prices exp-cumulate the returns (treated as 100*log ratios), giving
    n_obs price rows so a re-ingested panel has n_obs - 1 returns.
    """
    y = panel.returns[1:]  # first return absorbed into the starting price
    log_prices = np.log(start_price) + np.vstack(
        [np.zeros(panel.n_assets), np.cumsum(y / 100.0, axis=0)])
    prices = np.exp(log_prices)
    ids = panel.asset_ids
    with open(prices_path, "w") as fh:
        fh.write("timestamp," + ",".join(ids) + "\n")
        for k, row in enumerate(prices):
            cells = ",".join(repr(float(v)) for v in row)
            fh.write(f"{start_ts + k * step_s},{cells}\n")
    with open(caps_path, "w") as fh:
        fh.write("id,market_cap_usd\n")
        for a in panel.assets:
            fh.write(f"{a.id},{repr(float(a.market_cap_usd))}\n")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    handlers = {"fit": cmd_fit, "analyze": cmd_analyze, "synth": cmd_synth}
    try:
        return handlers[args.command](args)
    except (DataError, ArtifactError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
