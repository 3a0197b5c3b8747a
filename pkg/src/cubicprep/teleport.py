"""Gate-teleportation of a weak cubic phase gate, verified two ways.

The analytic route applies the closed-form output law

    |psi_out> ~ exp[-(x+m)^2/(4 e^{2r})] (1 + i gamma/2 (x+m)^3) |psi_in>,
    gamma = 2 a e^{-3r} / sqrt(6),

while the circuit route couples the input to the anti-squeezed resource
with a controlled-X interaction and projects the resource mode onto the
homodyne outcome.  Cross-validating the two is this module's main job.

All operators here except the coupling are functions of the quadrature x
alone and therefore commute; they are built in the eigenbasis of the
truncated x operator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import gates
from .errors import (
    GridTooCoarseError,
    MultiModeInputError,
    ShapeMismatchError,
    TruncationRiskWarning,
)
from .fock import StateVector, normalize

#: default grid for position-space diagnostics
DEFAULT_X_GRID = (-8.0, 8.0, 401)


def gamma_from(a: float, r: float) -> float:
    """Teleported gate strength gamma = 2 a e^{-3r} / sqrt(6)."""
    return 2.0 * a * np.exp(-3.0 * r) / np.sqrt(6.0)


@dataclass(frozen=True)
class TeleportSetup:
    """Resource parameter, anti-squeezing, homodyne outcome and cutoff."""

    a: float
    r: float
    m: float
    cutoff: int = 25

    @property
    def gamma(self) -> float:
        return gamma_from(self.a, self.r)


def _x_function_gate(f, cutoff: int) -> gates.GateMatrix:
    lam, v, vh = gates._x_eig(cutoff)
    return gates.GateMatrix((v * f(lam)) @ vh, 1, cutoff)


def noise_op(m: float, r: float, cutoff: int) -> gates.GateMatrix:
    """Gaussian damping exp[-(x+m)^2 / (4 e^{2r})]; Hermitian, spectrum in (0, 1]."""
    scale = 4.0 * np.exp(2.0 * r)
    return _x_function_gate(lambda x: np.exp(-((x + m) ** 2) / scale), cutoff)


def gff(m: float, gamma: float, cutoff: int) -> gates.GateMatrix:
    """Feed-forward correction exp[-i gamma (3 m x^2 + 3 m^2 x + m^3) / 2]."""
    return _x_function_gate(
        lambda x: np.exp(-0.5j * gamma * (3 * m * x ** 2 + 3 * m ** 2 * x + m ** 3)), cutoff)


def gkp_output_analytic(psi_in: StateVector, setup: TeleportSetup) -> StateVector:
    """Closed-form first-order output state, normalized."""
    if psi_in.num_modes != 1:
        raise MultiModeInputError("teleportation input must be single-mode")
    if psi_in.cutoff != setup.cutoff:
        raise ShapeMismatchError("input cutoff differs from setup cutoff")
    g, m, scale = setup.gamma, setup.m, 4.0 * np.exp(2.0 * setup.r)
    op = _x_function_gate(
        lambda x: np.exp(-((x + m) ** 2) / scale) * (1.0 + 0.5j * g * (x + m) ** 3),
        setup.cutoff)
    out = op.matrix @ psi_in.amplitudes
    state, _ = normalize(StateVector(out))
    return state


def _auto_work_cutoff(cutoff: int, r: float) -> int:
    # the anti-squeezed resource spreads Fock support by ~ e^{2|r|}
    return max(cutoff, min(240, int(np.ceil(cutoff * np.exp(abs(r)))) + 20))


def gkp_circuit_sim(
    psi_in: StateVector,
    resource: StateVector,
    r: float,
    m: float,
    cutoff: int,
    x_grid: np.ndarray | None = None,
    work_cutoff: int | None = None,
) -> StateVector:
    """Simulate the teleportation circuit and return the heralded output.

    Mode 0 carries ``psi_in``, mode 1 the resource.  S(r)^dag anti-squeezes
    the resource, the controlled-X coupling entangles the pair, and mode 1
    is projected onto the x-eigenbra at the homodyne outcome ``m`` via its
    Hermite-function row vector.  The circuit runs at an internal
    ``work_cutoff`` (auto-scaled with r) so that the anti-squeezed resource
    is represented faithfully, and the output is truncated back to
    ``cutoff``.
    """
    if psi_in.num_modes != 1 or resource.num_modes != 1:
        raise MultiModeInputError("teleportation operates on single-mode states")
    if psi_in.cutoff != cutoff or resource.cutoff != cutoff:
        raise ShapeMismatchError("states must live at the requested cutoff")
    if cutoff < 25:
        warnings.warn("cutoff below 25 risks visible truncation error in the circuit route",
                      TruncationRiskWarning, stacklevel=2)
    if x_grid is None:
        # anti-squeezing stretches the resource's position support by e^r,
        # so the diagnostic grid must widen with it
        span = 8.0 * np.exp(max(r, 0.0)) + 2.0 * abs(m)
        n_pts = 2 * int(np.ceil(span / 0.04)) + 1
        x_grid = np.linspace(-span, span, n_pts)
    big = work_cutoff or _auto_work_cutoff(cutoff, r)

    res_w = np.zeros(big, dtype=np.complex128)
    res_w[:cutoff] = resource.amplitudes
    res_w = gates.squeeze(-r, big).matrix @ res_w
    psi_w = np.zeros(big, dtype=np.complex128)
    psi_w[:cutoff] = psi_in.amplitudes

    # coupling exp[+i x_0 p_1 / 2] (adjoint of controlled_x): block-diagonal
    # in the x-eigenbasis of mode 0, acting as D(-x/2) on mode 1
    lam, vx, vxh = gates._x_eig(big)
    _, _, wd, vd = gates._single_mode_eigs(big)
    joint = np.outer(psi_w, res_w)
    t_x = vxh @ joint
    amp = t_x @ vd.conj()
    amp *= np.exp(0.5j * lam[:, None] * wd[None, :])
    t_x = amp @ vd.T
    joint = vx @ t_x

    # homodyne projection of mode 1 at x = m
    row = gates.position_wavefunctions(big, np.array([m]))[:, 0]
    out_w = joint @ row

    # grid diagnostic: the measured mode's position density must be resolved
    phi = joint @ gates.position_wavefunctions(big, x_grid)
    density = np.sum(np.abs(phi) ** 2, axis=0)
    total = float(np.vdot(joint, joint).real)
    covered = float(np.trapezoid(density, x_grid))
    if abs(covered - total) > 1e-4 * max(total, 1e-300):
        raise GridTooCoarseError(
            f"x-grid captures {covered:.6g} of {total:.6g}; refine or widen the grid")

    state, _ = normalize(StateVector(out_w[:cutoff].copy()))
    return state
