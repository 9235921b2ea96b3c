import csv
import json
from pathlib import Path

import pytest

from pqvarnet.cli import main
from pqvarnet.report import REQUIRED_FILES


def run(argv):
    return main(argv)


def synth_panel(tmp_path, kind="linear-var", n=3, t=400, seed=0, params=None):
    out = tmp_path / f"panel_{kind}_{seed}"
    argv = ["synth", "--kind", kind, "--n", str(n), "--t", str(t),
            "--seed", str(seed), "--out", str(out)]
    if params:
        argv += ["--params", json.dumps(params)]
    assert run(argv) == 0
    return out


def test_usage_errors_exit_one(capsys):
    assert run(["frobnicate"]) == 1
    assert run(["fit", "--prices", "p.csv"]) == 1
    assert "error" in capsys.readouterr().err


def test_synth_output_schema(tmp_path):
    out = synth_panel(tmp_path, t=250)
    with open(out / "prices.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["timestamp", "asset000", "asset001", "asset002"]
    assert len(rows) == 1 + 250  # header + T price rows
    assert all(len(r) == 4 for r in rows)
    caps = (out / "caps.csv").read_text().splitlines()
    assert caps[0] == "id,market_cap_usd"
    assert len(caps) == 4


def test_synth_same_seed_identical_files(tmp_path):
    a = synth_panel(tmp_path / "a", seed=3)
    b = synth_panel(tmp_path / "b", seed=3)
    for name in ("prices.csv", "caps.csv", "planted_edges.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_synth_truth_file_lists_planted_links(tmp_path):
    out = synth_panel(tmp_path, params={"diag": -0.3, "cross": -0.2})
    truth = json.loads((out / "planted_edges.json").read_text())
    assert truth["kind"] == "linear-var"
    edges = {tuple(e) for e in truth["edges"]}
    assert (0, 1, "linear", "median", -1) in edges
    assert len(edges) == 12  # (3 diagonal + 1 cross) x 3 regions


def test_synth_rejects_bad_spec(tmp_path):
    code = run(["synth", "--kind", "linear-var", "--n", "2", "--t", "100",
                "--params", json.dumps({"diag": 1.5}),
                "--out", str(tmp_path / "bad")])
    assert code == 2


def test_fit_analyze_end_to_end(tmp_path, capsys):
    panel = synth_panel(tmp_path, t=400)
    art = tmp_path / "artifact"
    code = run(["fit", "--prices", str(panel / "prices.csv"),
                "--caps", str(panel / "caps.csv"), "--out", str(art),
                "--jobs", "1"])
    assert code == 0
    assert (art / "artifact.json").exists()
    report = tmp_path / "report"
    assert run(["analyze", "--artifact", str(art), "--out", str(report)]) == 0
    for name in REQUIRED_FILES:
        assert (report / name).exists()
    assert "report written" in capsys.readouterr().out


def test_fit_missing_input_exits_two(tmp_path, capsys):
    code = run(["fit", "--prices", str(tmp_path / "nope.csv"),
                "--caps", str(tmp_path / "caps.csv"),
                "--out", str(tmp_path / "art")])
    assert code == 2
    assert "data error" in capsys.readouterr().err


def test_analyze_missing_artifact_exits_two(tmp_path, capsys):
    code = run(["analyze", "--artifact", str(tmp_path / "nothing"),
                "--out", str(tmp_path / "rep")])
    assert code == 2
    assert "data error" in capsys.readouterr().err


def test_fit_config_file_with_flag_override(tmp_path):
    panel = synth_panel(tmp_path, t=400)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 0.01, "baseline_method": "mls"}))
    art = tmp_path / "art_cfg"
    code = run(["fit", "--prices", str(panel / "prices.csv"),
                "--caps", str(panel / "caps.csv"), "--out", str(art),
                "--config", str(cfg), "--alpha", "0.05", "--jobs", "1"])
    assert code == 0
    stored = json.loads((art / "artifact.json").read_text())
    assert stored["config"]["alpha"] == 0.05       # flag wins over file
    assert stored["config"]["baseline_method"] == "mls"
    assert stored["standard_var"]["method"] == "mls"


def test_fit_no_stabilize_flag(tmp_path):
    panel = synth_panel(tmp_path, t=400)
    art = tmp_path / "art_raw"
    code = run(["fit", "--prices", str(panel / "prices.csv"),
                "--caps", str(panel / "caps.csv"), "--out", str(art),
                "--no-stabilize", "--jobs", "1"])
    assert code == 0
    stored = json.loads((art / "artifact.json").read_text())
    assert stored["config"]["stabilize"] is False


def tree_bytes(root):
    root = Path(root)
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_fit_rerun_byte_identical(tmp_path):
    panel = synth_panel(tmp_path, t=400)
    args = ["fit", "--prices", str(panel / "prices.csv"),
            "--caps", str(panel / "caps.csv"), "--jobs", "1"]
    assert run(args + ["--out", str(tmp_path / "a1")]) == 0
    assert run(args + ["--out", str(tmp_path / "a2")]) == 0
    assert tree_bytes(tmp_path / "a1") == tree_bytes(tmp_path / "a2")
