"""Gate matrices on the truncated Fock basis (hbar = 2 convention).

Two construction routes are used, both spectral (exact matrix exponentials
of anti-Hermitian generators, computed through one eigendecomposition that
is cached per dimension):

* squeeze and displace return the matrix elements of the *exact* gate
  restricted to the cutoff.  They are computed in an enlarged embedding
  space so that the retained block converges to the infinite-dimensional
  elements; the resulting block is slightly non-unitary and the norm it
  loses is exactly the population leaking past the cutoff.  Downstream
  training uses that deficit as its truncation penalty, so these two gates
  must not be replaced by unitary-by-construction approximations.
* beamsplitter, cubic_phase and controlled_x are exponentials of the
  truncated generator itself (exactly unitary; the beamsplitter is exact
  on every total-photon sector that fits inside the cutoff).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ModeOutOfRangeError, ShapeMismatchError, TruncationRiskWarning
from .fock import StateVector

HBAR = 2.0

#: embedding dimensions used for exact-element gates
_PAD_LADDER = (64, 128, 256, 512)


def ladder(cutoff: int) -> np.ndarray:
    """Annihilation operator a on the truncated basis."""
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(np.complex128)


def number_op(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff)).astype(np.complex128)


def position_op(cutoff: int) -> np.ndarray:
    """x = a + a^dag  (hbar = 2)."""
    a = ladder(cutoff)
    return a + a.conj().T


def momentum_op(cutoff: int) -> np.ndarray:
    """p = -i (a - a^dag)  (hbar = 2)."""
    a = ladder(cutoff)
    return -1j * (a - a.conj().T)


@dataclass(frozen=True)
class GateMatrix:
    """Dense operator acting on ``arity`` modes of a shared cutoff."""

    matrix: np.ndarray
    arity: int
    cutoff: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        dim = self.cutoff ** self.arity
        if m.shape != (dim, dim):
            raise ShapeMismatchError(f"expected {(dim, dim)} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def dagger(self) -> "GateMatrix":
        return GateMatrix(self.matrix.conj().T, self.arity, self.cutoff)


# ---------------------------------------------------------------------------
# cached eigensystems
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _single_mode_eigs(dim: int):
    """Eigensystems of i*(a^2 - adag^2)/2 and i*(adag - a) at dimension ``dim``."""
    a = ladder(dim)
    ad = a.conj().T
    w_sq, v_sq = np.linalg.eigh(1j * (a @ a - ad @ ad) / 2)
    w_d, v_d = np.linalg.eigh(1j * (ad - a))
    return w_sq, v_sq, w_d, v_d


@lru_cache(maxsize=None)
def _bs_eig(cutoff: int):
    """Eigensystem of i*(a1 a2^dag - a1^dag a2) on the two-mode space."""
    a = ladder(cutoff)
    ad = a.conj().T
    g = np.kron(a, ad) - np.kron(ad, a)
    w, v = np.linalg.eigh(1j * g)
    return w, v, v.conj().T


@lru_cache(maxsize=None)
def _x_eig(cutoff: int):
    w, v = np.linalg.eigh(position_op(cutoff))
    return w, v, v.conj().T


@lru_cache(maxsize=None)
def _cx_eig(cutoff: int):
    h = np.kron(position_op(cutoff), momentum_op(cutoff))  # Hermitian
    w, v = np.linalg.eigh(h)
    return w, v, v.conj().T


def _pad_for_squeeze(mag: float, cutoff: int) -> int:
    # boundary error decays like tanh(r)^(2*(pad-cutoff)); aim below 1e-13
    q = np.tanh(max(abs(mag), 0.05)) ** 2
    need = cutoff + 13.0 / max(-np.log10(q), 1e-3)
    for pad in _PAD_LADDER:
        if pad >= need and pad >= 3 * cutoff:
            return pad
    return _PAD_LADDER[-1]


def _pad_for_displace(mag: float, cutoff: int) -> int:
    # coherent tails are Poisson: mean + wide margin is plenty
    need = max(3 * cutoff, abs(mag) ** 2 + 20 * abs(mag) + 30)
    for pad in _PAD_LADDER:
        if pad >= need:
            return pad
    return _PAD_LADDER[-1]


def _exact_gate_block(kind: str, mag: float, cutoff: int) -> np.ndarray:
    """Top-left cutoff x cutoff block of exp(mag*K) computed at an embedding
    dimension large enough that the block matches the exact gate."""
    if kind == "squeeze":
        pad = _pad_for_squeeze(mag, cutoff)
        w, v, _, _ = _single_mode_eigs(pad)
    else:
        pad = _pad_for_displace(mag, cutoff)
        _, _, w, v = _single_mode_eigs(pad)
    cols = (v * np.exp(-1j * mag * w)) @ v.conj().T[:, :cutoff]
    return cols[:cutoff, :]


# ---------------------------------------------------------------------------
# gate constructors
# ---------------------------------------------------------------------------

def _warn_truncation(label: str, mag: float, limit: float, cutoff: int) -> None:
    if mag > limit and cutoff < 20:
        warnings.warn(
            f"{label} magnitude {mag:.3g} at cutoff {cutoff} loses accuracy to truncation",
            TruncationRiskWarning,
            stacklevel=3,
        )


def squeeze(z: complex, cutoff: int) -> GateMatrix:
    """S(z) = exp[(conj(z) a^2 - z a^dag^2)/2] with z = r e^{i phi}."""
    z = complex(z)
    r, phi = abs(z), np.angle(z)
    _warn_truncation("squeeze", r, 1.5, cutoff)
    block = _exact_gate_block("squeeze", r, cutoff)
    ph = np.exp(1j * (phi / 2) * np.arange(cutoff))
    return GateMatrix((ph[:, None] * block) * ph.conj()[None, :], 1, cutoff)


def displace(alpha: complex, cutoff: int) -> GateMatrix:
    """D(alpha) = exp[alpha a^dag - conj(alpha) a]."""
    alpha = complex(alpha)
    t, beta = abs(alpha), np.angle(alpha)
    _warn_truncation("displacement", t, 2.5, cutoff)
    block = _exact_gate_block("displace", t, cutoff)
    ph = np.exp(1j * beta * np.arange(cutoff))
    return GateMatrix((ph[:, None] * block) * ph.conj()[None, :], 1, cutoff)


def beamsplitter(theta: float, phi: float, cutoff: int) -> GateMatrix:
    """B(theta, phi) = exp[theta(e^{i phi} a1 a2^dag - e^{-i phi} a1^dag a2)].

    theta is the mixing angle; the gate conserves total photon number.
    """
    w, v, vh = _bs_eig(cutoff)
    core = (v * np.exp(-1j * theta * w)) @ vh
    ph = np.exp(1j * phi * np.arange(cutoff))
    ph2 = np.kron(ph, np.ones(cutoff))  # e^{i phi n} on the first mode
    return GateMatrix((ph2.conj()[:, None] * core) * ph2[None, :], 2, cutoff)


def cubic_phase(gamma: float, cutoff: int) -> GateMatrix:
    """V(gamma) = exp[i gamma x^3 / 2]  (hbar = 2)."""
    w, v, vh = _x_eig(cutoff)
    return GateMatrix((v * np.exp(0.5j * gamma * w ** 3)) @ vh, 1, cutoff)


def controlled_x(cutoff: int) -> GateMatrix:
    """C_x = exp[-i x_1 p_2 / 2] on two modes."""
    w, v, vh = _cx_eig(cutoff)
    return GateMatrix((v * np.exp(-0.5j * w)) @ vh, 2, cutoff)


def identity_gate(cutoff: int, arity: int = 1) -> GateMatrix:
    return GateMatrix(np.eye(cutoff ** arity, dtype=np.complex128), arity, cutoff)


def apply(gate: GateMatrix, modes: list[int] | tuple[int, ...], state: StateVector) -> StateVector:
    """Contract ``gate`` onto the named modes of ``state``; other modes untouched."""
    modes = list(modes)
    if gate.arity != len(modes):
        raise ShapeMismatchError(f"gate arity {gate.arity} vs {len(modes)} modes")
    if gate.cutoff != state.cutoff:
        raise ShapeMismatchError(f"gate cutoff {gate.cutoff} vs state cutoff {state.cutoff}")
    if len(set(modes)) != len(modes):
        raise ModeOutOfRangeError("modes must be distinct")
    for m in modes:
        if not 0 <= m < state.num_modes:
            raise ModeOutOfRangeError(f"mode {m} out of range for {state.num_modes} modes")
    c = state.cutoff
    g = gate.matrix.reshape((c,) * (2 * gate.arity))
    out = np.tensordot(g, state.amplitudes, axes=(range(gate.arity, 2 * gate.arity), modes))
    # tensordot puts the contracted (output) axes first; restore mode order
    out = np.moveaxis(out, range(gate.arity), modes)
    return StateVector(out)


# ---------------------------------------------------------------------------
# position representation
# ---------------------------------------------------------------------------

def position_wavefunctions(num_levels: int, x: np.ndarray) -> np.ndarray:
    """<x|n> for n < num_levels on the points ``x`` (hbar = 2).

    psi_0(x) = (2 pi)^{-1/4} exp(-x^2/4) and x psi_n = sqrt(n+1) psi_{n+1}
    + sqrt(n) psi_{n-1}, evaluated by the stable upward recurrence.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = x / np.sqrt(2.0)
    out = np.zeros((num_levels, x.size))
    out[0] = np.pi ** -0.25 * np.exp(-xi ** 2 / 2)
    if num_levels > 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(2, num_levels):
        out[n] = np.sqrt(2.0 / n) * xi * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out * 2 ** -0.25


def squeezing_db(r: float) -> float:
    """Squeezing magnitude in dB: 10 log10(e^{2r})."""
    return 10.0 * np.log10(np.exp(2.0 * abs(r)))


# ---------------------------------------------------------------------------
# fast helpers for circuit evaluation (shared with the gadgets module)
# ---------------------------------------------------------------------------

def _prep_mode_vector(z: complex, alpha: complex, cutoff: int) -> np.ndarray:
    """S(z) D(alpha) |0> as a length-``cutoff`` vector of the truncated
    exact-element gates, without building the full matrices."""
    z, alpha = complex(z), complex(alpha)
    if alpha == 0:
        vec = np.zeros(cutoff, dtype=np.complex128)
        vec[0] = 1.0
    else:
        t, beta = abs(alpha), np.angle(alpha)
        pad_d = _pad_for_displace(t, cutoff)
        _, _, w_d, v_d = _single_mode_eigs(pad_d)
        coh = (v_d * np.exp(-1j * t * w_d)) @ v_d.conj().T[:, 0]
        vec = coh[:cutoff] * np.exp(1j * beta * np.arange(cutoff))
    if z == 0:
        return vec

    r, phi = abs(z), np.angle(z)
    pad_s = _pad_for_squeeze(r, cutoff)
    w_s, v_s = _single_mode_eigs(pad_s)[:2]
    ph = np.exp(1j * (phi / 2) * np.arange(cutoff))
    inner = v_s.conj().T[:, :cutoff] @ (ph.conj() * vec)
    out = (v_s[:cutoff, :] * np.exp(-1j * r * w_s)) @ inner
    return ph * out
