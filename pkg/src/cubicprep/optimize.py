"""Training stack: penalized loss, quasi-Newton local search, basinhopping
with Metropolis acceptance, two-stage training and the brute-force
probability search for the two-mode gadget.

The scalar loss is, per handle,

    fid:       -fidelity + penalty
    fid_prob:  -fidelity - probability + penalty

with penalty = penalty_weight * (|1 - norm_in| + |1 - norm_out|) flagging
population lost past the Fock cutoff.  The probability term is rewarded
(negative sign) so the second training stage raises the preparation yield
from the fidelity optimum it is seeded with.  An impossible post-selection
maps to the finite value +penalty_weight so optimizers never see NaN/Inf.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.optimize as sopt

from .errors import NonFiniteLossError, ShapeMismatchError
from .fock import ZERO_NORM_TOL, PnrOutcome, StateVector
from .gadgets import (
    PARAM_LENGTHS,
    THREE_MODE,
    TWO_MODE,
    CircuitParams,
    _fast_fid_prob,
    default_pnr_pattern,
    num_modes,
    unpack_params,
)

#: initialization ranges for the random starting point
INIT_SQUEEZE_MAG = (0.0, 0.8)
INIT_DISPLACEMENT = 1.5
INIT_THETA = (0.0, np.pi / 2)

FID_HANDLE = "fid"
FID_PROB_HANDLE = "fid_prob"


@dataclass
class LossConfig:
    """Everything the scalar loss needs besides the parameter vector."""

    architecture: str
    target: StateVector
    pnr_pattern: tuple[PnrOutcome, ...]
    cutoff: int = 15
    handle: str = FID_HANDLE
    penalty_weight: float = 100.0

    def __post_init__(self):
        if self.handle not in (FID_HANDLE, FID_PROB_HANDLE):
            raise ShapeMismatchError(f"unknown loss handle {self.handle!r}")
        if self.penalty_weight <= 0:
            raise ShapeMismatchError("penalty_weight must be positive")
        self._target_flat = self.target.amplitudes.reshape(-1)
        self._counts = tuple(o.count for o in self.pnr_pattern)


@dataclass
class HopperConfig:
    niter: int = 40
    step_size: float = 1.0
    temperature: float = 1.0
    seed: object = None
    local_tol: float = 1e-9
    max_local_iters: int = 100

    def validate(self) -> None:
        if self.niter < 0 or self.step_size <= 0 or self.temperature <= 0:
            raise ShapeMismatchError("need niter >= 0, step_size > 0, temperature > 0")


@dataclass
class TrainConfig:
    hopper: HopperConfig = field(default_factory=HopperConfig)
    pnr_pattern: tuple[PnrOutcome, ...] | None = None
    cutoff: int = 15
    penalty_weight: float = 100.0
    # None: second (probability) stage only for the three-mode gadget
    two_stage: bool | None = None
    # the single probability polish is cheap next to basinhopping, so it
    # gets a budget large enough to actually converge
    polish_max_iters: int = 400


@dataclass
class TrainedResult:
    params: CircuitParams
    fidelity: float
    probability: float
    loss_value: float
    trace: list[float]

    def to_json_dict(self, config: dict | None = None) -> dict:
        from .gadgets import params_to_json_dict
        return {
            "config": config or {},
            "params": params_to_json_dict(self.params),
            "fidelity": self.fidelity,
            "probability": self.probability,
            "loss_value": self.loss_value,
            "trace": list(self.trace),
        }


def loss(x: np.ndarray, config: LossConfig) -> float:
    """Total, finite training loss for a packed parameter vector."""
    fid, prob, norm_in, norm_out = _fast_fid_prob(
        np.asarray(x, dtype=float), config.architecture, config._counts,
        config._target_flat, config.cutoff)
    penalty = config.penalty_weight * (abs(1.0 - norm_in) + abs(1.0 - norm_out))
    if prob < ZERO_NORM_TOL:
        return config.penalty_weight + penalty
    if config.handle == FID_HANDLE:
        return -fid + penalty
    return -fid - prob + penalty


def local_minimize(
    f: Callable[..., float],
    x0: np.ndarray,
    tol: float = 1e-9,
    max_iters: int = 100,
    args: tuple = (),
) -> tuple[np.ndarray, float]:
    """Quasi-Newton (BFGS) descent with central finite-difference gradients.

    Guarantees f(x*) <= f(x0); raises NonFiniteLossError on NaN/Inf values.
    """
    x0 = np.asarray(x0, dtype=float)
    f0 = f(x0, *args)
    if not np.isfinite(f0):
        raise NonFiniteLossError(f"objective is {f0} at the starting point")
    res = sopt.minimize(
        f, x0, args=args, method="BFGS", jac="3-point",
        options={"finite_diff_rel_step": 1e-6, "gtol": tol, "maxiter": max_iters},
    )
    if not np.isfinite(res.fun):
        raise NonFiniteLossError("objective became non-finite during descent")
    if res.fun > f0:
        return x0, float(f0)
    return np.asarray(res.x, dtype=float), float(res.fun)


@dataclass
class BasinResult:
    x: np.ndarray
    fun: float
    trace: list[float]
    accepted: int = 0


def metropolis_accept_probability(f_new: float, f_old: float, temperature: float) -> float:
    """min(1, exp(-(f_new - f_old)/T)); at T -> 0+ only improvements pass."""
    if temperature <= 0:
        raise ShapeMismatchError("temperature must be positive")
    return float(np.exp(min(0.0, -(f_new - f_old) / temperature)))


def basinhopping(f: Callable[..., float], x0: np.ndarray, cfg: HopperConfig,
                 args: tuple = ()) -> BasinResult:
    """Global search: local minimize, then ``niter`` cycles of a uniform
    random jump in [-step_size, step_size] per coordinate, local minimize,
    and Metropolis acceptance at temperature ``temperature``.

    Returns the best point ever visited (not the last accepted one);
    ``trace`` holds the best-so-far loss after the initial descent and
    after each hop.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    x_old, f_old = local_minimize(f, x0, cfg.local_tol, cfg.max_local_iters, args)
    best_x, best_f = x_old, f_old
    trace = [best_f]
    accepted = 0
    for _ in range(cfg.niter):
        jump = x_old + rng.uniform(-cfg.step_size, cfg.step_size, size=x_old.size)
        x_new, f_new = local_minimize(f, jump, cfg.local_tol, cfg.max_local_iters, args)
        if f_new < best_f:
            best_x, best_f = x_new, f_new
        if rng.random() < metropolis_accept_probability(f_new, f_old, cfg.temperature):
            x_old, f_old = x_new, f_new
            accepted += 1
        trace.append(best_f)
    return BasinResult(best_x, best_f, trace, accepted)


def _random_init(architecture: str, rng: np.random.Generator) -> np.ndarray:
    m = num_modes(architecture)
    n_bs = 1 if architecture == TWO_MODE else 3
    parts = [
        rng.uniform(*INIT_SQUEEZE_MAG, size=m),
        rng.uniform(0.0, 2 * np.pi, size=m),
    ]
    if architecture == TWO_MODE:
        parts.append(rng.uniform(0.0, INIT_DISPLACEMENT, size=m))
        parts.append(rng.uniform(0.0, 2 * np.pi, size=m))
    else:
        parts.append(rng.uniform(-INIT_DISPLACEMENT, INIT_DISPLACEMENT, size=m))
    parts.append(rng.uniform(*INIT_THETA, size=n_bs))
    parts.append(rng.uniform(0.0, 2 * np.pi, size=n_bs))
    x0 = np.concatenate(parts)
    assert x0.size == PARAM_LENGTHS[architecture]
    return x0


def train_gadget(architecture: str, target: StateVector,
                 cfg: TrainConfig | None = None) -> TrainedResult:
    """Two-stage training: basinhopping on fidelity, then (three-mode by
    default) a local probability-raising polish seeded at the optimum."""
    cfg = cfg or TrainConfig()
    pattern = cfg.pnr_pattern or default_pnr_pattern(architecture)
    base = dict(architecture=architecture, target=target, pnr_pattern=pattern,
                cutoff=cfg.cutoff, penalty_weight=cfg.penalty_weight)
    cfg_fid = LossConfig(handle=FID_HANDLE, **base)

    seed_seq = np.random.SeedSequence(cfg.hopper.seed) \
        if not isinstance(cfg.hopper.seed, np.random.SeedSequence) else cfg.hopper.seed
    init_ss, hop_ss = seed_seq.spawn(2)
    x0 = _random_init(architecture, np.random.default_rng(init_ss))
    hopper = replace(cfg.hopper, seed=hop_ss)

    stage1 = basinhopping(loss, x0, hopper, args=(cfg_fid,))
    x_final, f_final = stage1.x, stage1.fun

    two_stage = cfg.two_stage if cfg.two_stage is not None else architecture == THREE_MODE
    if two_stage:
        cfg_fp = LossConfig(handle=FID_PROB_HANDLE, **base)
        x_final, f_final = local_minimize(
            loss, x_final, cfg.hopper.local_tol, cfg.polish_max_iters, args=(cfg_fp,))

    fid, prob, _, _ = _fast_fid_prob(
        x_final, architecture, cfg_fid._counts, cfg_fid._target_flat, cfg.cutoff)
    params = unpack_params(x_final, architecture, pattern)
    return TrainedResult(params, fid, prob, f_final, stage1.trace)


def prob_opt(
    target: StateVector,
    nbh: int = 20,
    niter: int = 30,
    architecture: str = TWO_MODE,
    pnr_pattern: tuple[PnrOutcome, ...] | None = None,
    cutoff: int = 15,
    penalty_weight: float = 100.0,
    seed: object = None,
    fid_band: float = 1e-3,
) -> TrainedResult:
    """Brute-force probability search: ``nbh`` independent fidelity
    trainings from fresh random starts; among those within ``fid_band``
    of the best fidelity, return the one with the highest probability."""
    if nbh < 1:
        raise ShapeMismatchError("nbh must be at least 1")
    runs = []
    seed_seq = np.random.SeedSequence(seed) \
        if not isinstance(seed, np.random.SeedSequence) else seed
    for child in seed_seq.spawn(nbh):
        cfg = TrainConfig(
            hopper=HopperConfig(niter=niter, seed=child),
            pnr_pattern=pnr_pattern, cutoff=cutoff,
            penalty_weight=penalty_weight, two_stage=False)
        runs.append(train_gadget(architecture, target, cfg))
    best_fid = max(r.fidelity for r in runs)
    candidates = [r for r in runs if r.fidelity >= best_fid - fid_band]
    return max(candidates, key=lambda r: r.probability)


@dataclass
class SweepRow:
    counts: tuple[int, ...]
    fidelity: float
    probability: float


def pnr_sweep(
    architecture: str,
    target: StateVector,
    patterns: Sequence[tuple[int, ...]],
    cfg: TrainConfig | None = None,
) -> list[SweepRow]:
    """One fidelity training per post-selection pattern, sorted by pattern.

    The sweep compares fidelity/probability trade-offs of the raw fidelity
    stage, so the probability polish is disabled.
    """
    cfg = cfg or TrainConfig()
    seed_seq = np.random.SeedSequence(cfg.hopper.seed) \
        if not isinstance(cfg.hopper.seed, np.random.SeedSequence) else cfg.hopper.seed
    rows = []
    ordered = sorted(tuple(int(c) for c in p) for p in patterns)
    for counts, child in zip(ordered, seed_seq.spawn(len(ordered))):
        run_cfg = TrainConfig(
            hopper=replace(cfg.hopper, seed=child),
            pnr_pattern=default_pnr_pattern(architecture, counts),
            cutoff=cfg.cutoff, penalty_weight=cfg.penalty_weight, two_stage=False)
        res = train_gadget(architecture, target, run_cfg)
        rows.append(SweepRow(counts, res.fidelity, res.probability))
    return rows
