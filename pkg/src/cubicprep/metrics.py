"""Fidelity and Wigner-function metrics (hbar = 2, so a = (x + ip)/2).

The Wigner function is evaluated from the closed-form Fock-basis kernel
(generalized Laguerre functions, one diagonal of the density matrix at a
time); with the conventions here a normalized state satisfies
integral W dx dp = 1  and  W(0,0) = <parity>/(2 pi).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, MultiModeInputError, ShapeMismatchError
from .fock import DensityMatrix, StateVector, inner

#: negative mass below this is treated as "no negative region"
NEG_MASS_TOL = 1e-12


@dataclass(frozen=True)
class WignerGrid:
    """Sampled Wigner function on a rectangular phase-space grid."""

    x: np.ndarray       # (nx,)
    p: np.ndarray       # (np,)
    values: np.ndarray  # (nx, np) real

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    @property
    def cell_area(self) -> float:
        return self.dx * self.dp

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)


@dataclass(frozen=True)
class NegativityReport:
    min_value: float
    min_location: tuple[float, float]
    negative_mass: float


def fidelity(a: StateVector | DensityMatrix, b: StateVector) -> float:
    """|<a|b>|^2 for pure ``a``; <b|a|b> when ``a`` is a density matrix."""
    if isinstance(a, DensityMatrix):
        if (a.num_modes, a.cutoff) != (b.num_modes, b.cutoff):
            raise ShapeMismatchError("density matrix and state dimensions differ")
        flat = b.amplitudes.reshape(-1)
        return float(np.real(flat.conj() @ (a.elements @ flat)))
    return float(abs(inner(a, b)) ** 2)


def _dm_matrix(state: StateVector | DensityMatrix) -> np.ndarray:
    if isinstance(state, DensityMatrix):
        if state.num_modes != 1:
            raise MultiModeInputError("Wigner function is implemented for one mode")
        return state.elements
    if state.num_modes != 1:
        raise MultiModeInputError("Wigner function is implemented for one mode")
    amp = state.amplitudes
    return np.outer(amp, amp.conj())


def wigner(
    state: StateVector | DensityMatrix,
    x_min: float = -6.0,
    x_max: float = 6.0,
    p_min: float = -6.0,
    p_max: float = 6.0,
    nx: int = 201,
    n_p: int = 201,
) -> WignerGrid:
    """Wigner function of a single-mode state on a rectangular grid."""
    rho = _dm_matrix(state)
    c = rho.shape[0]
    xs = np.linspace(x_min, x_max, nx)
    ps = np.linspace(p_min, p_max, n_p)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    A = 0.5 * (X + 1j * P)

    # closed-form kernel: rho[m, n] with n = m + d pairs with
    #   K = (-1)^m sqrt(m!/n!) (2 A)^d e^{-2|A|^2} L_m^{(d)}(4|A|^2) / (2 pi)
    # (the parity identity W = Tr[rho D P D^dag]/(2 pi) expanded on |m><n|),
    # accumulated over diagonals d with the Laguerre three-term recurrence.
    y = 4.0 * np.abs(A) ** 2
    envelope = np.exp(-0.5 * y) / (2.0 * np.pi)
    b = 2.0 * A
    t = np.ones_like(A)  # (2 A)^d / sqrt(d!)
    out = np.zeros_like(y)
    for d in range(c):
        if d > 0:
            t = t * b / np.sqrt(d)
        lag_prev = None
        lag = np.ones_like(y)  # L_0^{(d)}
        scale = 1.0            # sqrt(m! d! / (m+d)!), folded with 1/sqrt(d!) in t
        for m in range(c - d):
            if m == 1:
                lag_prev, lag = lag, 1.0 + d - y
            elif m > 1:
                lag_prev, lag = lag, ((2 * m - 1 + d - y) * lag - (m - 1 + d) * lag_prev) / m
            if m > 0:
                scale *= np.sqrt(m / (m + d))
            coeff = rho[m, m + d] * ((-1.0) ** m * scale)
            if abs(coeff) < 1e-18:
                continue
            if d == 0:
                out += np.real(coeff) * lag
            else:
                out += 2.0 * np.real(coeff * t) * lag
    return WignerGrid(xs, ps, out * envelope)


def _check_grids(a: WignerGrid, b: WignerGrid) -> None:
    if not (np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)):
        raise GridMismatchError("Wigner grids differ")


def wigner_overlap_fidelity(wa: WignerGrid, wb: WignerGrid) -> float:
    """4 pi * sum(Wa * Wb) dx dp; equals |<a|b>|^2 for pure states in-grid.

    The 2 pi hbar = 4 pi prefactor makes the overlap of a state with itself
    equal to one.
    """
    _check_grids(wa, wb)
    return float(4.0 * np.pi * np.sum(wa.values * wb.values) * wa.cell_area)


def negative_overlap(wa: WignerGrid, wb: WignerGrid) -> float:
    """Overlap of the negative regions, each renormalized to unit mass.

    On cells where both functions are negative, min(|Wa|, |Wb|) is
    integrated after dividing each function's negative part by its own
    total negative mass.  Returns 0 if either input has no negative region.
    """
    _check_grids(wa, wb)
    neg_a = np.clip(-wa.values, 0.0, None)
    neg_b = np.clip(-wb.values, 0.0, None)
    mass_a = neg_a.sum() * wa.cell_area
    mass_b = neg_b.sum() * wb.cell_area
    if mass_a < NEG_MASS_TOL or mass_b < NEG_MASS_TOL:
        return 0.0
    return float(np.minimum(neg_a / mass_a, neg_b / mass_b).sum() * wa.cell_area)


def negativity_report(w: WignerGrid) -> NegativityReport:
    idx = np.unravel_index(np.argmin(w.values), w.values.shape)
    neg_mass = float(np.clip(-w.values, 0.0, None).sum() * w.cell_area)
    return NegativityReport(
        min_value=float(w.values[idx]),
        min_location=(float(w.x[idx[0]]), float(w.p[idx[1]])),
        negative_mass=neg_mass,
    )


def wigner_to_csv(w: WignerGrid, path: str) -> None:
    """Dump (x, p, W) triples for external plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "p", "wigner"])
        for i, xv in enumerate(w.x):
            for j, pv in enumerate(w.p):
                writer.writerow([f"{xv:.17g}", f"{pv:.17g}", f"{w.values[i, j]:.17g}"])
