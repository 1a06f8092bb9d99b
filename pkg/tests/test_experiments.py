import numpy as np
import pytest
import yaml

from glauberkit.cli import EXIT_ASSERT, EXIT_OK, EXIT_SETUP, main
from glauberkit.config import ExperimentConfig
from glauberkit.errors import SetupError
from glauberkit.experiments import run_experiment
from glauberkit.lattice import SpinConfig, box
from glauberkit.outputs import (RunResult, Table, csv_text, emit_outputs, pgm_text, read_manifest,
                                sha256_file, snapshot_grid)


def test_pgm_encoding():
    d = box(2)
    assert pgm_text(snapshot_grid(SpinConfig.constant(d, 1))) == "P2\n2 2\n1\n1 1\n1 1\n"
    s = SpinConfig.constant(box(2, 2), -1)
    s.spins[s.domain.index(0, 1)] = 1   # north-west site
    assert pgm_text(snapshot_grid(s)) == "P2\n2 2\n1\n1 0\n0 0\n"


def test_empty_run_manifest(tmp_path):
    files = emit_outputs(RunResult("surface-tension"), ["# seed: 0"], tmp_path)
    assert files == [] and (tmp_path / "manifest.txt").read_text() == ""


def test_csv_header_echo():
    cfg = ExperimentConfig("zero-temp", seed=5, out="/somewhere")
    t = Table(["a", "b"], [{"a": 1, "b": 0.5}])
    text = csv_text(t, cfg.echo())
    lines = text.splitlines()
    assert all(line.startswith("#") for line in lines[:-2])
    assert "# seed: 5" in lines and lines[-2:] == ["a,b", "1,0.5"]
    assert "somewhere" not in text


def test_config_validation(tmp_path):
    with pytest.raises(SetupError):
        ExperimentConfig("nope")
    with pytest.raises(SetupError):
        ExperimentConfig("zero-temp", p=1.5)
    with pytest.raises(SetupError):
        ExperimentConfig("zero-temp", replicas=0)
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"experiment": "zero-temp", "seed": 3, "t_end": 7}))
    cfg = ExperimentConfig.load(p)
    assert cfg.seed == 3 and cfg.get("t_end") == 7


def test_zero_temp_trivial_densities():
    for p, status in ((1.0, "plus"), (0.0, "minus")):
        cfg = ExperimentConfig("zero-temp", replicas=2, p=p, lattice={"kind": "torus", "n": 8})
        rows = run_experiment(cfg).tables["absorption"].rows
        assert [r["status"] for r in rows] == [status, status]
        assert all(r["time"] == 0.0 for r in rows)


def test_couple_bias_identity_overlay():
    cfg = ExperimentConfig("couple-bias", replicas=3, beta=1.0, p=1.0, lattice={"kind": "torus", "n": 8},
                           params={"t_end": 8.0, "burn_in": 20.0})
    res = run_experiment(cfg)
    assert res.ok and all(r["disagree"] == 0 for r in res.tables["tv_estimate"].rows)


def test_phase_order_plus_start_stays_plus():
    cfg = ExperimentConfig("phase-order", replicas=2, beta=0.8, p=1.0, lattice={"kind": "torus", "n": 16},
                           params={"t_end": 20.0, "center": 8})
    res = run_experiment(cfg)
    assert res.ok, [c for c in res.checks if not c.ok]


def _cli_config(tmp_path, body):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(body))
    return str(p)


def test_cli_exit_codes_and_determinism(tmp_path, capsys):
    cfg = _cli_config(tmp_path, {"experiment": "surface-tension", "betas": [1.0, 2.0], "n_theta": 21,
                                 "n_dual": 10})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["surface-tension", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["surface-tension", "--config", cfg, "--out", str(b)]) == EXIT_OK
    ma, mb = read_manifest(a), read_manifest(b)
    assert ma == mb and ma
    for name, digest in ma.items():
        assert sha256_file(a / name) == digest
    # config for another experiment, unreadable config, unwritable output
    assert main(["polymer-lclt", "--config", cfg, "--out", str(a)]) == EXIT_SETUP
    assert main(["polymer-lclt", "--config", str(tmp_path / "missing.yaml")]) == EXIT_SETUP
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["surface-tension", "--config", cfg, "--out", str(blocker / "sub")]) == EXIT_SETUP


def test_cli_failed_check_exit_code(tmp_path):
    # an impossible absorption requirement on a too-short horizon
    cfg = _cli_config(tmp_path, {"experiment": "zero-temp", "replicas": 2, "p": 0.6,
                                 "lattice": {"kind": "torus", "n": 16}, "budget_c": 0.001,
                                 "min_absorb_frac": 1.0})
    assert main(["zero-temp", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_ASSERT


def test_shipped_configs_load():
    from pathlib import Path
    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))
    assert paths
    for p in paths:
        assert ExperimentConfig.load(p).experiment in p.stem or p.stem.startswith("multiscale")


def test_cli_refuses_exact_schedule_simulation(tmp_path):
    cfg = _cli_config(tmp_path, {"experiment": "multiscale-audit", "lattice": {"kind": "torus", "n": 32},
                                 "schedule": {"mode": "exact", "log_ell0": 2.0}})
    assert main(["multiscale-audit", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_SETUP
