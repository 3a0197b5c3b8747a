"""Batch experiment runner.

Reads a JSON config describing one experiment, fans independent units out
over a process pool, and writes deterministic CSV/JSON results plus a
manifest that embeds the full config.  Experiments:

  train-grid      train a gadget for each target parameter a on a grid
  pnr-sweep       train one gadget per PNR post-selection pattern
  random-targets  mean fidelity against random low-Fock targets
  noise-sweep     fidelity / probability / Wigner minimum vs source loss
  farm-table      resource-farm trade-off rows (n, epsilon, p)
  teleport-verify analytic-vs-circuit teleportation fidelities

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, farm, gadgets, gates, metrics, optimize, teleport
from .errors import ZeroNormError
from .fock import StateVector, fock_basis_state, normalize

SCHEMA_VERSION = 1

EXPERIMENTS = ("train-grid", "pnr-sweep", "random-targets", "noise-sweep",
               "farm-table", "teleport-verify")
_TRAINING_EXPERIMENTS = ("train-grid", "pnr-sweep", "random-targets")


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _check_keys(section: dict, allowed: dict[str, bool], where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")
    missing = sorted(k for k, required in allowed.items() if required and k not in section)
    if missing:
        raise ConfigError(f"missing keys in {where}: {missing}")


def _grid(section: dict, where: str, integer: bool = False) -> np.ndarray:
    _check_keys(section, {"start": True, "stop": True, "points": True}, where)
    pts = np.linspace(float(section["start"]), float(section["stop"]), int(section["points"]))
    if integer:
        pts = np.unique(np.round(pts).astype(int))
    return pts


def _hopper(section: dict, seed, where: str) -> optimize.HopperConfig:
    _check_keys(section, {"niter": False, "step_size": False, "temperature": False,
                          "local_tol": False, "max_local_iters": False}, where)
    return optimize.HopperConfig(
        niter=int(section.get("niter", 40)),
        step_size=float(section.get("step_size", 1.0)),
        temperature=float(section.get("temperature", 1.0)),
        seed=seed,
        local_tol=float(section.get("local_tol", 1e-9)),
        max_local_iters=int(section.get("max_local_iters", 100)),
    )


def _named_input(name: str, cutoff: int) -> StateVector:
    if name == "vacuum":
        return fock_basis_state((0,), cutoff)
    if name == "one":
        return fock_basis_state((1,), cutoff)
    if name == "plus":
        amp = np.zeros(cutoff, dtype=np.complex128)
        amp[0] = amp[1] = 1 / np.sqrt(2)
        return StateVector(amp)
    raise ConfigError(f"unknown teleport input {name!r} (vacuum | one | plus)")


# ---------------------------------------------------------------------------
# worker functions (top level so the process pool can pickle them)
# ---------------------------------------------------------------------------

def _train_unit(job: dict) -> dict:
    cfg = optimize.TrainConfig(
        hopper=optimize.HopperConfig(**job["hopper"]),
        pnr_pattern=gadgets.default_pnr_pattern(job["architecture"], job["counts"]),
        cutoff=job["cutoff"],
        two_stage=job["two_stage"],
    )
    target = gadgets.weak_cubic_state(job["a"], job["cutoff"]) if job["target"] == "weak_cubic" \
        else gadgets.random_target(job["n_c"], job["target_seed"], job["cutoff"])
    result = optimize.train_gadget(job["architecture"], target, cfg)
    return {
        "index": job["index"],
        "row": gadgets.params_csv_row(result.params, job.get("a", float(job.get("n_c", 0)))),
        "fidelity": result.fidelity,
        "probability": result.probability,
        "loss_value": result.loss_value,
    }


def _noise_unit(job: dict) -> dict:
    params = gadgets.params_from_json_dict(job["params"])
    target = gadgets.weak_cubic_state(job["a"], job["cutoff"])
    eta_src = 1.0 - job["loss"]
    result = gadgets.run_gadget_noisy(params, eta_src, job["eta_det"],
                                      kmax=job["kmax"], cutoff=job["cutoff"])
    grid = metrics.wigner(result.state)
    report = metrics.negativity_report(grid)
    return {
        "index": job["index"],
        "loss": job["loss"],
        "fidelity": metrics.fidelity(result.state, target),
        "probability": result.probability,
        "wigner_min": report.min_value,
    }


def _teleport_unit(job: dict) -> dict:
    cutoff = job["cutoff"]
    setup = teleport.TeleportSetup(job["a"], job["r"], job["m"], cutoff)
    psi_in = _named_input(job["input"], cutoff)
    resource = gadgets.weak_cubic_state(job["a"], cutoff)
    circuit = teleport.gkp_circuit_sim(psi_in, resource, job["r"], job["m"], cutoff)
    analytic = teleport.gkp_output_analytic(psi_in, setup)
    corrected = gates.apply(teleport.gff(job["m"], setup.gamma, cutoff), [0], circuit)
    noise = teleport.noise_op(job["m"], setup.r, cutoff)
    gate = gates.cubic_phase(setup.gamma, cutoff)
    ref, _ = normalize(StateVector(noise.matrix @ (gate.matrix @ psi_in.amplitudes)))
    return {
        "index": job["index"],
        "a": job["a"], "r": job["r"], "m": job["m"], "input": job["input"],
        "gamma": setup.gamma,
        "fidelity_vs_analytic": metrics.fidelity(circuit, analytic),
        "fidelity_vs_gate": metrics.fidelity(corrected, ref),
    }


def _run_units(units: list[dict], worker, workers: int) -> list[dict]:
    if workers <= 1:
        results = [worker(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(worker, units))
    return sorted(results, key=lambda r: r["index"])


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# experiment drivers
# ---------------------------------------------------------------------------

def _drive_train_grid(cfg: dict, seed: int, cutoff: int, workers: int, out: Path) -> list[str]:
    _check_keys(cfg, {"experiment": True, "seed": False, "cutoff": False,
                      "architecture": True, "a_grid": True, "pnr_counts": False,
                      "optimizer": False, "two_stage": False}, "train-grid config")
    arch = cfg["architecture"]
    a_values = _grid(cfg["a_grid"], "a_grid")
    counts = tuple(cfg["pnr_counts"]) if "pnr_counts" in cfg else None
    hopper = _hopper(cfg.get("optimizer", {}), None, "optimizer")
    children = np.random.SeedSequence(seed).spawn(len(a_values))
    units = []
    for i, (a, child) in enumerate(zip(a_values, children)):
        h = dict(niter=hopper.niter, step_size=hopper.step_size,
                 temperature=hopper.temperature, seed=child,
                 local_tol=hopper.local_tol, max_local_iters=hopper.max_local_iters)
        units.append({"index": i, "a": float(a), "architecture": arch, "counts": counts,
                      "cutoff": cutoff, "hopper": h, "two_stage": cfg.get("two_stage"),
                      "target": "weak_cubic"})
    results = _run_units(units, _train_unit, workers)
    header = gadgets.params_csv_header(arch) + ["fidelity", "probability", "loss_value"]
    rows = [r["row"] + [r["fidelity"], r["probability"], r["loss_value"]] for r in results]
    _write_csv(out / "train_grid.csv", header, rows)
    return ["train_grid.csv"]


def _drive_pnr_sweep(cfg: dict, seed: int, cutoff: int, workers: int, out: Path) -> list[str]:
    _check_keys(cfg, {"experiment": True, "seed": False, "cutoff": False,
                      "architecture": True, "a": True, "patterns": True,
                      "optimizer": False}, "pnr-sweep config")
    arch = cfg["architecture"]
    patterns = sorted(tuple(int(c) for c in p) for p in cfg["patterns"])
    hopper = _hopper(cfg.get("optimizer", {}), None, "optimizer")
    children = np.random.SeedSequence(seed).spawn(len(patterns))
    units = []
    for i, (counts, child) in enumerate(zip(patterns, children)):
        h = dict(niter=hopper.niter, step_size=hopper.step_size,
                 temperature=hopper.temperature, seed=child,
                 local_tol=hopper.local_tol, max_local_iters=hopper.max_local_iters)
        units.append({"index": i, "a": float(cfg["a"]), "architecture": arch,
                      "counts": counts, "cutoff": cutoff, "hopper": h,
                      "two_stage": False, "target": "weak_cubic"})
    results = _run_units(units, _train_unit, workers)
    header = ["pattern", "fidelity", "probability"]
    rows = [["|".join(str(c) for c in patterns[r["index"]]), r["fidelity"], r["probability"]]
            for r in results]
    _write_csv(out / "pnr_sweep.csv", header, rows)
    return ["pnr_sweep.csv"]


def _drive_random_targets(cfg: dict, seed: int, cutoff: int, workers: int, out: Path) -> list[str]:
    _check_keys(cfg, {"experiment": True, "seed": False, "cutoff": False,
                      "architecture": False, "n_c_values": True, "num_seeds": True,
                      "pnr_counts": False, "optimizer": False}, "random-targets config")
    arch = cfg.get("architecture", gadgets.THREE_MODE)
    counts = tuple(cfg["pnr_counts"]) if "pnr_counts" in cfg else None
    n_c_values = [int(n) for n in cfg["n_c_values"]]
    num_seeds = int(cfg["num_seeds"])
    hopper = _hopper(cfg.get("optimizer", {}), None, "optimizer")
    root = np.random.SeedSequence(seed)
    units = []
    idx = 0
    for n_c in n_c_values:
        for j, child in enumerate(root.spawn(num_seeds)):
            h = dict(niter=hopper.niter, step_size=hopper.step_size,
                     temperature=hopper.temperature, seed=child.spawn(1)[0],
                     local_tol=hopper.local_tol, max_local_iters=hopper.max_local_iters)
            units.append({"index": idx, "architecture": arch, "counts": counts,
                          "cutoff": cutoff, "hopper": h, "two_stage": False,
                          "target": "random", "n_c": n_c,
                          "target_seed": (seed or 0) * 100003 + n_c * 1009 + j})
            idx += 1
    results = _run_units(units, _train_unit, workers)
    header = ["n_c", "num_seeds", "mean_fidelity", "min_fidelity", "mean_probability"]
    rows = []
    for k, n_c in enumerate(n_c_values):
        chunk = results[k * num_seeds:(k + 1) * num_seeds]
        fids = np.array([r["fidelity"] for r in chunk])
        probs = np.array([r["probability"] for r in chunk])
        rows.append([n_c, num_seeds, float(fids.mean()), float(fids.min()), float(probs.mean())])
    _write_csv(out / "random_targets.csv", header, rows)
    return ["random_targets.csv"]


def _drive_noise_sweep(cfg: dict, seed: int, cutoff: int, workers: int, out: Path) -> list[str]:
    _check_keys(cfg, {"experiment": True, "seed": False, "cutoff": False,
                      "a": True, "eta_det": True, "loss_grid": True, "kmax": False,
                      "params_file": False, "optimizer": False}, "noise-sweep config")
    a = float(cfg["a"])
    losses = _grid(cfg["loss_grid"], "loss_grid")
    if "params_file" in cfg:
        with open(cfg["params_file"]) as fh:
            params_dict = json.load(fh)
    else:
        hopper = _hopper(cfg.get("optimizer", {}), np.random.SeedSequence(seed), "optimizer")
        trained = optimize.train_gadget(
            gadgets.THREE_MODE, gadgets.weak_cubic_state(a, cutoff),
            optimize.TrainConfig(hopper=hopper, cutoff=cutoff))
        params_dict = gadgets.params_to_json_dict(trained.params)
    units = [{"index": i, "a": a, "loss": float(l), "eta_det": float(cfg["eta_det"]),
              "kmax": cfg.get("kmax"), "cutoff": cutoff, "params": params_dict}
             for i, l in enumerate(losses)]
    results = _run_units(units, _noise_unit, workers)
    header = ["loss", "fidelity", "probability", "wigner_min"]
    rows = [[r["loss"], r["fidelity"], r["probability"], r["wigner_min"]] for r in results]
    _write_csv(out / "noise_sweep.csv", header, rows)
    (out / "noise_sweep_params.json").write_text(json.dumps(params_dict, indent=1))
    return ["noise_sweep.csv", "noise_sweep_params.json"]


def _drive_farm_table(cfg: dict, seed: int, cutoff: int, workers: int, out: Path) -> list[str]:
    _check_keys(cfg, {"experiment": True, "seed": False, "fixed": True,
                      "n_grid": True}, "farm-table config")
    fixed = cfg["fixed"]
    _check_keys(fixed, {"p": False, "epsilon": False}, "farm-table fixed")
    if len(fixed) != 1:
        raise ConfigError("fix exactly one of p or epsilon")
    ns = _grid(cfg["n_grid"], "n_grid", integer=True)
    rows = farm.tradeoff_table(ns, fixed_p=fixed.get("p"), fixed_epsilon=fixed.get("epsilon"))
    _write_csv(out / "farm_table.csv", ["n", "epsilon", "p"], [list(r) for r in rows])
    return ["farm_table.csv"]


def _drive_teleport_verify(cfg: dict, seed: int, cutoff: int, workers: int, out: Path) -> list[str]:
    _check_keys(cfg, {"experiment": True, "seed": False, "cutoff": False,
                      "a_values": True, "r_values": True, "m_values": True,
                      "inputs": False}, "teleport-verify config")
    inputs = cfg.get("inputs", ["vacuum", "one", "plus"])
    units = []
    idx = 0
    for a in cfg["a_values"]:
        for r in cfg["r_values"]:
            for m in cfg["m_values"]:
                for name in inputs:
                    units.append({"index": idx, "a": float(a), "r": float(r),
                                  "m": float(m), "input": name, "cutoff": cutoff})
                    idx += 1
    results = _run_units(units, _teleport_unit, workers)
    for r in results:
        r.pop("index")
    report = {"schema_version": SCHEMA_VERSION, "cutoff": cutoff, "tuples": results}
    (out / "teleport_verify.json").write_text(json.dumps(report, indent=1, sort_keys=True))
    return ["teleport_verify.json"]


_DRIVERS = {
    "train-grid": _drive_train_grid,
    "pnr-sweep": _drive_pnr_sweep,
    "random-targets": _drive_random_targets,
    "noise-sweep": _drive_noise_sweep,
    "farm-table": _drive_farm_table,
    "teleport-verify": _drive_teleport_verify,
}

_DEFAULT_CUTOFFS = {"teleport-verify": 25}


def run(config: dict, workers: int = 1, out_dir: str = "results") -> dict:
    """Execute one experiment config; returns the manifest dict."""
    if "experiment" not in config:
        raise ConfigError("config needs an 'experiment' key")
    experiment = config["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; pick one of {EXPERIMENTS}")
    if experiment in _TRAINING_EXPERIMENTS and config.get("seed") is None:
        raise ConfigError(f"{experiment} requires an explicit seed for reproducibility")
    seed = int(config.get("seed", 0))
    cutoff = int(config.get("cutoff", _DEFAULT_CUTOFFS.get(experiment, 15)))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    started = time.time()
    outputs = _DRIVERS[experiment](config, seed, cutoff, workers, out)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "experiment": experiment,
        "config": config,
        "seed": seed,
        "cutoff": cutoff,
        "workers": workers,
        "outputs": outputs,
        "wall_time_s": time.time() - started,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return manifest


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cubicprep",
        description="Run one reproducible gadget-training / analysis experiment.")
    parser.add_argument("--experiment", choices=EXPERIMENTS,
                        help="overrides the experiment named in the config file")
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--workers", type=int, default=1, help="process-pool size")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--cutoff", type=int, help="overrides the config cutoff")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
        if args.experiment:
            config["experiment"] = args.experiment
        if args.seed is not None:
            config["seed"] = args.seed
        if args.cutoff is not None:
            config["cutoff"] = args.cutoff
        run(config, workers=args.workers, out_dir=args.out)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        json.dump({"error": "config", "detail": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (ZeroNormError, FloatingPointError, OverflowError, ValueError) as exc:
        json.dump({"error": "numerical", "detail": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
