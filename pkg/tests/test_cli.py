import json

import numpy as np
import pytest

from cubicprep import cli
from cubicprep.gadgets import THREE_MODE, params_to_json_dict
from test_gadgets import random_params


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def test_unknown_experiment_rejected():
    with pytest.raises(cli.ConfigError):
        cli.run({"experiment": "frobnicate"})


def test_unknown_keys_rejected(tmp_path):
    cfg = {"experiment": "farm-table", "fixed": {"p": 0.02},
           "n_grid": {"start": 1, "stop": 10, "points": 4}, "typo_key": 1}
    with pytest.raises(cli.ConfigError):
        cli.run(cfg, out_dir=str(tmp_path))


def test_training_requires_seed(tmp_path):
    cfg = {"experiment": "train-grid", "architecture": "two_mode",
           "a_grid": {"start": 0.3, "stop": 0.3, "points": 1}}
    with pytest.raises(cli.ConfigError):
        cli.run(cfg, out_dir=str(tmp_path))


def test_main_exit_codes(tmp_path):
    bad = write_config(tmp_path, {"experiment": "nope"})
    assert cli.main(["--config", bad, "--out", str(tmp_path / "o")]) == 2
    missing = str(tmp_path / "missing.json")
    assert cli.main(["--config", missing, "--out", str(tmp_path / "o")]) == 2
    # p = 0 makes the farm math degenerate -> numerical failure
    degenerate = write_config(tmp_path, {
        "experiment": "farm-table", "fixed": {"p": 0.0},
        "n_grid": {"start": 1, "stop": 10, "points": 3}}, "degenerate.json")
    assert cli.main(["--config", degenerate, "--out", str(tmp_path / "o")]) == 3


def test_farm_table_output_and_manifest(tmp_path):
    cfg = {"experiment": "farm-table", "fixed": {"p": 0.02},
           "n_grid": {"start": 10, "stop": 400, "points": 6}}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "results"
    assert cli.main(["--config", path, "--out", str(out)]) == 0
    rows = (out / "farm_table.csv").read_text().strip().splitlines()
    assert rows[0] == "n,epsilon,p"
    assert len(rows) == 7
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "farm-table"
    assert manifest["config"]["fixed"] == {"p": 0.02}
    assert manifest["outputs"] == ["farm_table.csv"]
    assert manifest["schema_version"] == cli.SCHEMA_VERSION


def test_farm_table_reruns_byte_identical(tmp_path):
    cfg = {"experiment": "farm-table", "fixed": {"epsilon": 0.005},
           "n_grid": {"start": 50, "stop": 500, "points": 5}}
    path = write_config(tmp_path, cfg)
    cli.main(["--config", path, "--out", str(tmp_path / "a")])
    cli.main(["--config", path, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a/farm_table.csv").read_bytes() == (tmp_path / "b/farm_table.csv").read_bytes()


def test_train_grid_deterministic_across_worker_counts(tmp_path):
    cfg = {"experiment": "train-grid", "seed": 3, "architecture": "two_mode",
           "a_grid": {"start": 0.3, "stop": 0.6, "points": 2},
           "optimizer": {"niter": 0, "max_local_iters": 30}}
    path = write_config(tmp_path, cfg)
    assert cli.main(["--config", path, "--out", str(tmp_path / "w1")]) == 0
    assert cli.main(["--config", path, "--out", str(tmp_path / "w2"), "--workers", "2"]) == 0
    a = (tmp_path / "w1/train_grid.csv").read_bytes()
    b = (tmp_path / "w2/train_grid.csv").read_bytes()
    assert a == b
    header = a.decode().splitlines()[0].split(",")
    assert header[:2] == ["a", "r1"]
    assert header[-3:] == ["fidelity", "probability", "loss_value"]


def test_train_grid_seed_changes_results(tmp_path):
    base = {"experiment": "train-grid", "architecture": "two_mode",
            "a_grid": {"start": 0.3, "stop": 0.3, "points": 1},
            "optimizer": {"niter": 0, "max_local_iters": 30}}
    p1 = write_config(tmp_path, {**base, "seed": 1}, "c1.json")
    p2 = write_config(tmp_path, {**base, "seed": 2}, "c2.json")
    cli.main(["--config", p1, "--out", str(tmp_path / "s1")])
    cli.main(["--config", p2, "--out", str(tmp_path / "s2")])
    assert (tmp_path / "s1/train_grid.csv").read_text() != (tmp_path / "s2/train_grid.csv").read_text()


def test_pnr_sweep_rows_sorted(tmp_path):
    cfg = {"experiment": "pnr-sweep", "seed": 5, "architecture": "two_mode", "a": 0.3,
           "patterns": [[1], [0]], "optimizer": {"niter": 0, "max_local_iters": 25}}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "res"
    assert cli.main(["--config", path, "--out", str(out)]) == 0
    rows = (out / "pnr_sweep.csv").read_text().strip().splitlines()
    assert rows[0] == "pattern,fidelity,probability"
    assert rows[1].startswith("0,") and rows[2].startswith("1,")


def test_random_targets_summary(tmp_path):
    cfg = {"experiment": "random-targets", "seed": 7, "n_c_values": [1], "num_seeds": 2,
           "optimizer": {"niter": 0, "max_local_iters": 40}}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "res"
    assert cli.main(["--config", path, "--out", str(out)]) == 0
    rows = (out / "random_targets.csv").read_text().strip().splitlines()
    assert rows[0] == "n_c,num_seeds,mean_fidelity,min_fidelity,mean_probability"
    fields = rows[1].split(",")
    assert fields[0] == "1" and fields[1] == "2"
    assert 0.0 <= float(fields[2]) <= 1.0


def test_noise_sweep_with_params_file(tmp_path):
    params = random_params(THREE_MODE, seed=2, scale=0.5)
    params_path = tmp_path / "params.json"
    params_path.write_text(json.dumps(params_to_json_dict(params)))
    cfg = {"experiment": "noise-sweep", "cutoff": 9, "a": 0.3, "eta_det": 0.96,
           "loss_grid": {"start": 0.0, "stop": 0.3, "points": 3},
           "params_file": str(params_path)}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "res"
    assert cli.main(["--config", path, "--out", str(out)]) == 0
    rows = (out / "noise_sweep.csv").read_text().strip().splitlines()
    assert rows[0] == "loss,fidelity,probability,wigner_min"
    assert len(rows) == 4
    losses = [float(r.split(",")[0]) for r in rows[1:]]
    assert losses == [0.0, 0.15, 0.3]
    saved = json.loads((out / "noise_sweep_params.json").read_text())
    assert saved["architecture"] == "three_mode"


def test_teleport_verify_report(tmp_path):
    cfg = {"experiment": "teleport-verify", "a_values": [0.3], "r_values": [0.3],
           "m_values": [0.0], "inputs": ["vacuum"]}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "res"
    assert cli.main(["--config", path, "--out", str(out)]) == 0
    report = json.loads((out / "teleport_verify.json").read_text())
    assert report["cutoff"] == 25
    (entry,) = report["tuples"]
    assert entry["input"] == "vacuum"
    assert entry["fidelity_vs_analytic"] > 0.99
    assert 0.0 <= entry["fidelity_vs_gate"] <= 1.0 + 1e-9
    assert np.isclose(entry["gamma"], 0.3 * 2 * np.exp(-0.9) / np.sqrt(6))


def test_cli_flag_overrides(tmp_path):
    cfg = {"experiment": "farm-table", "fixed": {"p": 0.02},
           "n_grid": {"start": 5, "stop": 20, "points": 3}, "seed": 1}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "res"
    assert cli.main(["--config", path, "--out", str(out), "--seed", "9"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 9
