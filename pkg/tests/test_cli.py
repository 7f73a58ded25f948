import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from nmcrecip import __version__
from nmcrecip.cli import EXIT_INCONCLUSIVE, EXIT_NUMERIC, EXIT_OK, EXIT_REJECT, EXIT_USAGE, run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return str(p)


def test_invariant_same_class(tmp_path, capsys):
    code = run(["invariant", "--config", str(CONFIGS / "invariant.yaml"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "invariant.json").read_text())
    assert report["result"]["verdict"] == "same-class"
    assert report["result"]["max_deviation"] == 0.0
    assert report["version"] == __version__
    assert report["config"]["other"] == {"kind": "constant", "alpha": 3.0}
    assert "same-class" in capsys.readouterr().out


def test_invariant_different_class(tmp_path):
    cfg = {"model": {"kind": "constant", "alpha": 1.0}, "other": {"kind": "exponential_time", "lam": 1.0}}
    assert run(["invariant", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_REJECT


def test_simulate_writes_paths(tmp_path):
    code = run(["simulate", "--config", str(CONFIGS / "simulate.yaml"), "--paths", "500", "--out", str(tmp_path)])
    assert code == EXIT_OK
    lines = (tmp_path / "paths.csv").read_text().splitlines()
    assert len(lines) == 500
    summary = json.loads((tmp_path / "simulate.json").read_text())
    assert summary["config"]["paths"] == 500
    assert sum(summary["result"]["count_histogram"].values()) == 500


def test_zero_paths_is_a_config_error(tmp_path):
    assert run(["simulate", "--config", str(CONFIGS / "simulate.yaml"), "--paths", "0", "--out", str(tmp_path)]) == EXIT_USAGE


@pytest.mark.parametrize(
    "cfg",
    [
        {"model": {"kind": "nope"}},
        {"x": 0},
        {"model": {"kind": "constant", "alpha": 1.0}, "source": {"type": "file", "path": "/no/such/file.csv"}},
        {"model": {"kind": "constant", "alpha": 1.0}, "source": {"type": "thin", "c": 1.5}},
    ],
)
def test_bad_configs(tmp_path, cfg):
    assert run(["membership-test", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_USAGE


def test_usage_errors(tmp_path):
    assert run(["frobnicate"]) == EXIT_USAGE
    assert run(["simulate", "--config", str(tmp_path / "missing.yaml")]) == EXIT_USAGE
    (tmp_path / "bad.yaml").write_text("model: [unclosed")
    assert run(["simulate", "--config", str(tmp_path / "bad.yaml")]) == EXIT_USAGE


def test_numeric_errors_exit_70(tmp_path):
    cfg = {"model": {"kind": "space_only", "base": 30.0, "abs_slope": 0.0, "window": [0, 4]}, "x": 0, "paths": 10}
    assert run(["simulate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_duality_exit_codes(tmp_path):
    base = {
        "model": {"kind": "constant", "alpha": 1.0},
        "source": {"type": "forward", "model": {"kind": "exponential_time", "lam": 2.0}, "x": 0},
        "seed": 3,
    }
    p = _write(tmp_path, base)
    assert run(["duality-check", "--config", p, "--paths", "500", "--out", str(tmp_path)]) == EXIT_INCONCLUSIVE
    assert run(["membership-test", "--config", p, "--paths", "50000", "--out", str(tmp_path)]) == EXIT_REJECT
    report = json.loads((tmp_path / "membership_test.json").read_text())
    assert report["result"]["verdict"] == "REJECT"
    assert len(report["result"]["report"]["pairs"]) == 12


def test_path_file_source(tmp_path):
    run(["bridge", "--config", str(CONFIGS / "bridge.yaml"), "--paths", "200", "--out", str(tmp_path)])
    cfg = {
        "model": {"kind": "exponential_time", "lam": 1.0},
        "reference": {"kind": "constant", "alpha": 1.0},
        "source": {"type": "file", "path": str(tmp_path / "paths.csv")},
    }
    assert run(["girsanov", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "girsanov.csv").read_text().splitlines()
    assert rows[0] == "path,log_density" and len(rows) == 201


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = str(CONFIGS / "simulate.yaml")
    monkeypatch.setenv("NMCRECIP_SEED", "99")
    run(["simulate", "--config", cfg, "--paths", "50", "--out", str(tmp_path / "env")])
    run(["simulate", "--config", cfg, "--paths", "50", "--seed", "99", "--out", str(tmp_path / "flag")])
    run(["simulate", "--config", cfg, "--paths", "50", "--seed", "1", "--out", str(tmp_path / "other")])
    env = (tmp_path / "env" / "paths.csv").read_text()
    assert env == (tmp_path / "flag" / "paths.csv").read_text()
    assert env != (tmp_path / "other" / "paths.csv").read_text()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "nmcrecip", "invariant", "--config", str(CONFIGS / "invariant.yaml"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("invariant: same-class")
