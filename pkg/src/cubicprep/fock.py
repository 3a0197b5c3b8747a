"""Truncated Fock-space states: normalization, inner products, PNR projection.

A multimode pure state is stored as a complex tensor of shape
``(cutoff,) * num_modes`` in row-major order with mode 0 slowest.  That
index order is also the wire format used by :func:`save_state`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError, ZeroNormError

#: squared-norm threshold below which a state counts as numerically zero
ZERO_NORM_TOL = 1e-30


@dataclass(frozen=True)
class StateVector:
    """Pure state on ``num_modes`` modes, each truncated to ``cutoff`` levels."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.ndim < 1 or any(d != amp.shape[0] for d in amp.shape):
            raise ShapeMismatchError(f"amplitudes must be (cutoff,)*num_modes, got {amp.shape}")
        if amp.shape[0] < 2:
            raise ShapeMismatchError("cutoff must be at least 2")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def num_modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def cutoff(self) -> int:
        return self.amplitudes.shape[0]

    def squared_norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state over the same truncated space, stored as a dim x dim matrix
    with dim = cutoff**num_modes and the StateVector index order."""

    elements: np.ndarray
    num_modes: int
    cutoff: int

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=np.complex128)
        dim = self.cutoff ** self.num_modes
        if el.shape != (dim, dim):
            raise ShapeMismatchError(f"expected {(dim, dim)} density matrix, got {el.shape}")
        object.__setattr__(self, "elements", el)

    def trace(self) -> float:
        return float(np.trace(self.elements).real)


@dataclass(frozen=True)
class PnrOutcome:
    """A photon-number-resolving detection: ``count`` photons seen on ``mode``."""

    mode: int
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ShapeMismatchError("photon count must be non-negative")


def vacuum(num_modes: int, cutoff: int) -> StateVector:
    """Multimode vacuum |0,...,0>."""
    if num_modes < 1:
        raise ShapeMismatchError("need at least one mode")
    amp = np.zeros((cutoff,) * num_modes, dtype=np.complex128)
    amp[(0,) * num_modes] = 1.0
    return StateVector(amp)


def fock_basis_state(ns: tuple[int, ...] | list[int], cutoff: int) -> StateVector:
    """Product number state |n0, n1, ...>."""
    ns = tuple(int(n) for n in ns)
    if any(n < 0 or n >= cutoff for n in ns):
        raise ShapeMismatchError(f"occupation {ns} outside cutoff {cutoff}")
    amp = np.zeros((cutoff,) * len(ns), dtype=np.complex128)
    amp[ns] = 1.0
    return StateVector(amp)


def normalize(state: StateVector) -> tuple[StateVector, float]:
    """Return ``(state / norm, norm)`` with norm the Euclidean tensor norm.

    Raises:
        ZeroNormError: the squared norm is below ``ZERO_NORM_TOL`` (an
            impossible post-selection upstream).
    """
    sq = state.squared_norm()
    if not np.isfinite(sq):
        raise ZeroNormError("state contains non-finite amplitudes")
    if sq < ZERO_NORM_TOL:
        raise ZeroNormError(f"squared norm {sq:.3e} below {ZERO_NORM_TOL:.1e}")
    norm = np.sqrt(sq)
    return StateVector(state.amplitudes / norm), float(norm)


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ShapeMismatchError(
            f"states have shapes {a.amplitudes.shape} vs {b.amplitudes.shape}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def project_pnr(state: StateVector, outcome: PnrOutcome) -> tuple[StateVector, float]:
    """Project one mode of ``state`` onto a photon count.

    Returns the *unnormalized* (num_modes - 1)-mode slice of the tensor and
    the outcome probability, i.e. the squared norm of that slice (exact for
    a normalized input).  A zero slice is returned as-is with probability 0;
    the caller decides whether that is an error.
    """
    if state.num_modes < 2:
        raise ShapeMismatchError("projection needs at least two modes")
    if not 0 <= outcome.mode < state.num_modes:
        raise ShapeMismatchError(f"mode {outcome.mode} out of range")
    if outcome.count >= state.cutoff:
        raise ShapeMismatchError(f"count {outcome.count} >= cutoff {state.cutoff}")
    slice_ = np.take(state.amplitudes, outcome.count, axis=outcome.mode)
    reduced = StateVector(slice_.copy())
    return reduced, reduced.squared_norm()


def to_density(state: StateVector) -> DensityMatrix:
    """|psi><psi| as a dense matrix (input assumed normalized)."""
    flat = state.amplitudes.reshape(-1)
    return DensityMatrix(np.outer(flat, flat.conj()), state.num_modes, state.cutoff)


def save_state(state: StateVector, path: str) -> None:
    """Write a self-describing JSON record of the state.

    Amplitudes are stored re/im interleaved in the documented row-major
    order (mode 0 slowest).
    """
    flat = state.amplitudes.reshape(-1)
    interleaved = np.empty(2 * flat.size)
    interleaved[0::2] = flat.real
    interleaved[1::2] = flat.imag
    record = {
        "format": "cubicprep-state",
        "version": 1,
        "num_modes": state.num_modes,
        "cutoff": state.cutoff,
        "amplitudes": interleaved.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(record, fh)


def load_state(path: str) -> StateVector:
    """Inverse of :func:`save_state`."""
    with open(path) as fh:
        record = json.load(fh)
    num_modes = int(record["num_modes"])
    cutoff = int(record["cutoff"])
    interleaved = np.asarray(record["amplitudes"], dtype=float)
    if interleaved.size != 2 * cutoff ** num_modes:
        raise ShapeMismatchError("amplitude array does not match num_modes/cutoff")
    flat = interleaved[0::2] + 1j * interleaved[1::2]
    return StateVector(flat.reshape((cutoff,) * num_modes))
