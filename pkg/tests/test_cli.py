import json
import subprocess
import sys

import numpy as np
import pytest

from quasiperiodic.cli import EXIT_INVALID, EXIT_OK, ExperimentConfig, main
from quasiperiodic.files import save_model, sha256
from quasiperiodic.rbm import RbmModel

SMALL = {
    "activation": ["--events", "1500", "--trials", "2", "--grid", "0.1,0.5,0.9", "--n-sources", "20"],
    "correlations": ["--events", "2000", "--max-lag", "10", "--n-sources", "20"],
    "rbm": ["--visible", "3", "--hidden", "3", "--samples", "1500", "--repeats", "2"],
    "patterns": ["--input-patterns", "4", "--cycles", "300", "--n-inputs", "20", "--n-patterns", "4"],
}

EXPECTED = {
    "activation": {"activation_periodic.csv", "activation_poisson.csv", "stationary.csv"},
    "correlations": {"auto_periodic.csv", "auto_poisson.csv", "cross_periodic.csv", "cross_poisson.csv"},
    "rbm": {"kl_gibbs_0.csv", "kl_gibbs_1.csv", "kl_network_0.csv", "kl_network_1.csv"},
    "patterns": {"patterns.csv"},
}


def invoke(cmd, out, *extra):
    return main([cmd, "--out", str(out), *SMALL[cmd], *extra])


def csv_bodies(out):
    return {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}


@pytest.mark.parametrize("cmd", sorted(SMALL))
def test_command_outputs_and_determinism(cmd, tmp_path):
    assert invoke(cmd, tmp_path / "a", "--seed", "3") == EXIT_OK
    assert invoke(cmd, tmp_path / "b", "--seed", "3") == EXIT_OK
    a, b = csv_bodies(tmp_path / "a"), csv_bodies(tmp_path / "b")
    assert set(a) == EXPECTED[cmd]
    assert a == b
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert set(manifest["files"]) == EXPECTED[cmd] | {"config.json"}
    for name, digest in manifest["files"].items():
        assert sha256(tmp_path / "a" / name) == digest


def test_config_snapshot_reruns(tmp_path):
    assert invoke("correlations", tmp_path / "a", "--seed", "5") == EXIT_OK
    snap = json.loads((tmp_path / "a" / "config.json").read_text())
    assert len(snap["drawn"]["frequencies"]) == 22
    assert main(["correlations", "--config", str(tmp_path / "a" / "config.json"),
                 "--out", str(tmp_path / "b")]) == EXIT_OK
    assert csv_bodies(tmp_path / "a") == csv_bodies(tmp_path / "b")


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"depth": 2, "trials": 1, "events": 500, "grid": [0.5], "n_sources": 10}))
    assert main(["activation", "--config", str(cfg), "--depth", "4", "--mode", "stationary",
                 "--out", str(tmp_path / "o")]) == EXIT_OK
    snap = json.loads((tmp_path / "o" / "config.json").read_text())
    assert snap["depth"] == 4 and snap["trials"] == 1
    assert set(csv_bodies(tmp_path / "o")) == {"stationary.csv"}


def test_stationary_csv_is_analytic(tmp_path):
    assert main(["activation", "--mode", "stationary", "--depth", "3", "--grid", "0.6",
                 "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "stationary.csv").read_text().splitlines()
    assert lines[0] == "p,q"
    assert float(lines[1].split(",")[1]) == pytest.approx(1.5**3 / (1 + 1.5**3), abs=1e-12)


def test_explicit_frequencies(tmp_path):
    freqs = ",".join(["45"] * 21)
    assert invoke("activation", tmp_path, "--frequencies", freqs, "--mode", "periodic") == EXIT_OK
    snap = json.loads((tmp_path / "config.json").read_text())
    assert snap["drawn"]["frequencies"] == [[45.0] * 21] * 2


def test_zero_weight_model_file(tmp_path):
    model = tmp_path / "zero.json"
    save_model(RbmModel(np.zeros((3, 3)), np.zeros(3), np.zeros(3)), model)
    assert main(["rbm", "--model", str(model), "--samples", "20000", "--repeats", "1",
                 "--streams", "4", "--out", str(tmp_path / "o")]) == EXIT_OK
    curves = {name: np.loadtxt(tmp_path / "o" / f"kl_{name}_0.csv", delimiter=",", skiprows=1)[:, 1]
              for name in ("gibbs", "network")}
    for kl in curves.values():
        assert kl[-1] < kl[0] / 5
    assert curves["gibbs"][-1] < 0.01
    # shared event streams leave pairwise structure in the network samples
    assert curves["network"][-1] < 0.1


@pytest.mark.parametrize("argv", [
    ["rbm", "--streams", "5"],
    ["rbm", "--visible", "20", "--hidden", "10"],
    ["rbm", "--visible", "3", "--hidden", "2"],
    ["rbm", "--model", "/does/not/exist.json"],
    ["patterns", "--mode", "poisson"],
    ["activation", "--grid", "0.5,1.2"],
    ["activation", "--depth", "0"],
    ["activation", "--freq-range", "50,40"],
    ["activation", "--frequencies", "1,2,3"],
    ["correlations", "--trials", "-1"],
    ["nonsense"],
    ["activation", "--events", "many"],
])
def test_validation_exit_code(argv, tmp_path, capsys):
    assert main([*argv, "--out", str(tmp_path)] if argv != ["nonsense"] else argv) == EXIT_INVALID
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "manifest.json").exists()


def test_unknown_config_field(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dpeth": 3}))
    assert main(["activation", "--config", str(cfg)]) == EXIT_INVALID
    cfg.write_text(json.dumps({"experiment": "rbm"}))
    assert main(["activation", "--config", str(cfg)]) == EXIT_INVALID


def test_runtime_failure_exit_code(tmp_path, monkeypatch):
    from quasiperiodic import cli

    def boom(c):
        raise RuntimeError("simulated failure")

    monkeypatch.setitem(cli._RUNNERS, "patterns", boom)
    assert main(["patterns", "--out", str(tmp_path)]) == cli.EXIT_RUNTIME


def test_config_roundtrip():
    c = ExperimentConfig(experiment="rbm", streams=8, weight_range=(-4, 4))
    back = ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict())))
    assert back.validate() == c.validate()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "quasiperiodic", "activation", "--mode", "stationary",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "stationary.csv").exists()
