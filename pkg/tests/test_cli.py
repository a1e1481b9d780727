import json

import numpy as np
import pytest

from kfsd.cli import load_config, main
from kfsd.errors import ConfigError


@pytest.fixture
def curves(tmp_path):
    path = tmp_path / "days.csv"
    rng = np.random.default_rng(0)
    hours = np.arange(24)
    X = 50 + 20 * np.sin(hours / 24 * 2 * np.pi)[None] + rng.normal(0, 3, size=(76, 24))
    X[[10, 40]] += 35
    np.savetxt(path, X, delimiter=",")
    return path


def test_simulate(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--model", "MM1", "--R", "1", "--out", str(out)]) == 0
    rows = (out / "dataset_000.csv").read_text().splitlines()
    assert len(rows) == 51 and len(rows[1].split(",")) == 51  # grid row + 50 curves
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 0 and "config_hash" in manifest


def test_simulate_no_outliers_and_rerun(tmp_path):
    args = ["simulate", "--alpha", "0", "--R", "2", "--seed", "4"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    labels = (tmp_path / "a" / "dataset_001.labels.csv").read_text().splitlines()[1:]
    assert all(l.endswith(",normal") for l in labels)
    for name in ("dataset_000.csv", "dataset_001.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_detect_day_matrix(curves, tmp_path, capsys):
    out = tmp_path / "det"
    assert main(["detect", str(curves), "--seed", "1", "--J", "5", "--out", str(out)]) == 0
    summary = (out / "summary.txt").read_text()
    assert summary.startswith("KFSD_tri: Curves detected as outliers: ")
    report = json.loads((out / "report.json").read_text())
    assert {10, 40} <= set(report["outliers"])
    assert "11, " in summary and "41" in summary  # day numbers start at 1
    assert report["seed"] == 1 and len(report["config_hash"]) == 16
    assert (out / "flags.csv").read_text().startswith("curve_index,outlier,depth\n")


def test_detect_small_nz_warns(curves, capsys):
    code = main(["detect", str(curves), "--sigma-percentile", "50", "--nz-factor", "1",
                 "--r", "0.05", "--fap", "0.05"])
    cap = capsys.readouterr()
    assert code == 0
    assert "WARN" in cap.err
    assert json.loads(cap.out.splitlines()[-1])["outliers"] == []


def test_detect_fbp_mbd(curves, capsys):
    assert main(["detect", str(curves), "--depth", "mbd", "--method", "fbp"]) == 0
    doc = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert doc["method"] == "FBP+MBD" and doc["depth"]["id"] == "MBD"


@pytest.mark.parametrize("args", [
    ["--depth", "xyz"],
    ["--depth", "mbd"],
    ["--method", "fbp+hmd", "--depth", "mbd"],
])
def test_detect_conflicts(curves, args, capsys):
    assert main(["detect", str(curves)] + args) == 2
    assert "error" in capsys.readouterr().err


def test_detect_bad_csv(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,oops,6\n")
    assert main(["detect", str(path)]) == 2
    assert "line 2, column 2" in capsys.readouterr().err


def test_detect_missing_file(tmp_path):
    assert main(["detect", str(tmp_path / "nope.csv")]) != 0


def test_detect_deterministic(curves, tmp_path):
    for d in ("a", "b"):
        main(["detect", str(curves), "--method", "wei", "--J", "4", "--seed", "3",
              "--out", str(tmp_path / d)])
    assert (tmp_path / "a" / "report.json").read_bytes() == \
        (tmp_path / "b" / "report.json").read_bytes()


def test_depth_command(curves, capsys):
    assert main(["depth", str(curves), "--depth", "hmd", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "curve_index,depth" and len(lines) == 77


def test_tune_command(curves, tmp_path, capsys):
    assert main(["tune", str(curves), "--J", "4", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "tune.json").read_text())
    assert doc["percentile"] in range(10, 100, 10)
    assert (tmp_path / "tune_trace.csv").exists()


def test_bench_single_cell(tmp_path):
    out = tmp_path / "bench"
    assert main(["bench", "--model", "MM5", "--alpha", "0.02", "--method", "KFSD_wei",
                 "--R", "1", "--J", "3", "--out", str(out)]) == 0
    rows = (out / "bench.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("MM5,0.02,KFSD_wei,")


def test_bench_dry_run(tmp_path, capsys):
    out = tmp_path / "never"
    assert main(["bench", "--model", "MM1,MM2", "--R", "5", "--dry-run", "--out", str(out)]) == 0
    assert "plan" in capsys.readouterr().out
    assert not out.exists()


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text(json.dumps({"seed": 1, "gamma": 0.2, "delta": 0.1}))
        env = {"KFSD_SEED": "2", "KFSD_GAMMA": "0.3"}
        cfg = load_config({"seed": 3}, cfg_file, env)
        assert (cfg.seed, cfg.gamma, cfg.delta, cfg.fap) == (3, 0.3, 0.1, 0.10)

    def test_unknown_key(self, tmp_path):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text(json.dumps({"sedd": 1}))
        with pytest.raises(ConfigError):
            load_config({}, cfg_file, {})

    def test_bad_value(self):
        with pytest.raises(ConfigError):
            load_config({}, None, {"KFSD_SEED": "abc"})
