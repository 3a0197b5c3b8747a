"""Two- and three-mode state-preparation gadgets.

A gadget prepares per-mode displaced squeezed vacua S(z_i) D(alpha_i) |0>,
mixes them through a beamsplitter array and post-selects photon-number
outcomes on all modes but mode 0, heralding a single-mode state.

Topology:
  * two_mode:  one beamsplitter on modes (0, 1); PNR on mode 1.
  * three_mode: beamsplitters on (0, 1), (1, 2), (0, 1); PNR on modes 1, 2.
    Displacements are constrained real (signed), which trains more stably.

Flat parameter vector layout (``pack_params``/``unpack_params``), the wire
format used in CSV rows and by the optimizer:
  two_mode   [r0, r1, phi_r0, phi_r1, d0, d1, phi_d0, phi_d1, theta, phi]
  three_mode [r0..r2, phi_r0..phi_r2, d0..d2, theta0..theta2, phi0..phi2]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import gates
from .channels import loss_kraus
from .errors import (
    CutoffTooSmallError,
    EtaZeroError,
    LengthMismatchError,
    ShapeMismatchError,
    ZeroNormError,
)
from .fock import (
    ZERO_NORM_TOL,
    DensityMatrix,
    PnrOutcome,
    StateVector,
    normalize,
    project_pnr,
    vacuum,
)

TWO_MODE = "two_mode"
THREE_MODE = "three_mode"
ARCHITECTURES = (TWO_MODE, THREE_MODE)

#: beamsplitter wiring per architecture, applied left to right
BS_PAIRS = {TWO_MODE: ((0, 1),), THREE_MODE: ((0, 1), (1, 2), (0, 1))}

#: measured modes (output is always mode 0)
PNR_MODES = {TWO_MODE: (1,), THREE_MODE: (1, 2)}

#: packed vector lengths
PARAM_LENGTHS = {TWO_MODE: 10, THREE_MODE: 15}


def num_modes(architecture: str) -> int:
    _check_architecture(architecture)
    return 2 if architecture == TWO_MODE else 3


def _check_architecture(architecture: str) -> None:
    if architecture not in ARCHITECTURES:
        raise ShapeMismatchError(f"unknown architecture {architecture!r}")


def default_pnr_pattern(architecture: str, counts=None) -> tuple[PnrOutcome, ...]:
    """PNR pattern on the measured modes; defaults are m=2 for two_mode and
    (m1, m2) = (1, 2) for three_mode."""
    _check_architecture(architecture)
    modes = PNR_MODES[architecture]
    if counts is None:
        counts = (2,) if architecture == TWO_MODE else (1, 2)
    if len(counts) != len(modes):
        raise ShapeMismatchError(f"{architecture} needs {len(modes)} PNR counts")
    return tuple(PnrOutcome(mode, int(cnt)) for mode, cnt in zip(modes, counts))


@dataclass
class CircuitParams:
    """Trainable gadget parameters.

    ``disp_mag`` holds displacement magnitudes for two_mode (with phases in
    ``disp_phase``) and signed real displacements for three_mode (where
    ``disp_phase`` must be None).
    """

    architecture: str
    squeeze_mag: np.ndarray
    squeeze_phase: np.ndarray
    disp_mag: np.ndarray
    disp_phase: np.ndarray | None
    bs_theta: np.ndarray
    bs_phi: np.ndarray
    pnr_pattern: tuple[PnrOutcome, ...] = field(default=())

    def __post_init__(self):
        for name in ("squeeze_mag", "squeeze_phase", "disp_mag", "bs_theta", "bs_phi"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.disp_phase is not None:
            self.disp_phase = np.asarray(self.disp_phase, dtype=float)
        if not self.pnr_pattern:
            self.pnr_pattern = default_pnr_pattern(self.architecture)
        self.validate()

    def validate(self) -> None:
        _check_architecture(self.architecture)
        m = num_modes(self.architecture)
        n_bs = len(BS_PAIRS[self.architecture])
        if self.squeeze_mag.shape != (m,) or self.squeeze_phase.shape != (m,):
            raise LengthMismatchError(f"{self.architecture} needs {m} squeezings")
        if self.disp_mag.shape != (m,):
            raise LengthMismatchError(f"{self.architecture} needs {m} displacements")
        if self.architecture == TWO_MODE:
            if self.disp_phase is None or self.disp_phase.shape != (m,):
                raise LengthMismatchError("two_mode displacements are complex (magnitude, phase)")
        elif self.disp_phase is not None:
            raise LengthMismatchError("three_mode displacements are real; no phases allowed")
        if self.bs_theta.shape != (n_bs,) or self.bs_phi.shape != (n_bs,):
            raise LengthMismatchError(f"{self.architecture} needs {n_bs} beamsplitters")
        modes = tuple(o.mode for o in self.pnr_pattern)
        if modes != PNR_MODES[self.architecture]:
            raise ShapeMismatchError(f"PNR pattern must measure modes {PNR_MODES[self.architecture]}")

    def squeezings(self) -> np.ndarray:
        """Complex z_i = r_i e^{i phi_i}."""
        return self.squeeze_mag * np.exp(1j * self.squeeze_phase)

    def displacements(self) -> np.ndarray:
        """Complex alpha_i (real-valued for three_mode)."""
        if self.architecture == TWO_MODE:
            return self.disp_mag * np.exp(1j * self.disp_phase)
        return self.disp_mag.astype(np.complex128)


@dataclass
class GadgetResult:
    """Heralded output state with its joint post-selection probability.

    ``norm_in``/``norm_out`` are the squared norms of the multimode state
    before/after the beamsplitter array; their deficit from 1 measures the
    population lost past the cutoff.
    """

    state: StateVector | DensityMatrix
    probability: float
    norm_in: float
    norm_out: float


# ---------------------------------------------------------------------------
# target states
# ---------------------------------------------------------------------------

def weak_cubic_state(a: float, cutoff: int = 15) -> StateVector:
    """(|0> + i a sqrt(3/2) |1> + i a |3>) / sqrt(1 + 5 a^2 / 2)."""
    if cutoff < 4:
        raise CutoffTooSmallError("weak cubic state needs Fock levels 0..3")
    amp = np.zeros(cutoff, dtype=np.complex128)
    amp[0] = 1.0
    amp[1] = 1j * a * np.sqrt(1.5)
    amp[3] = 1j * a
    return StateVector(amp / np.sqrt(1.0 + 2.5 * a * a))


def random_target(n_c: int, seed, cutoff: int = 15) -> StateVector:
    """Normalized random superposition of Fock levels 0..n_c (deterministic per seed)."""
    if n_c >= cutoff:
        raise CutoffTooSmallError(f"support 0..{n_c} does not fit below cutoff {cutoff}")
    rng = np.random.default_rng(seed)
    coeff = rng.standard_normal(n_c + 1) + 1j * rng.standard_normal(n_c + 1)
    amp = np.zeros(cutoff, dtype=np.complex128)
    amp[: n_c + 1] = coeff / np.linalg.norm(coeff)
    return StateVector(amp)


# ---------------------------------------------------------------------------
# packed parameter vectors
# ---------------------------------------------------------------------------

def pack_params(params: CircuitParams) -> np.ndarray:
    params.validate()
    parts = [params.squeeze_mag, params.squeeze_phase, params.disp_mag]
    if params.architecture == TWO_MODE:
        parts.append(params.disp_phase)
    parts.extend([params.bs_theta, params.bs_phi])
    return np.concatenate(parts)


def unpack_params(
    x: np.ndarray,
    architecture: str,
    pnr_pattern: tuple[PnrOutcome, ...] | None = None,
) -> CircuitParams:
    _check_architecture(architecture)
    x = np.asarray(x, dtype=float)
    if x.shape != (PARAM_LENGTHS[architecture],):
        raise LengthMismatchError(
            f"{architecture} expects {PARAM_LENGTHS[architecture]} parameters, got {x.shape}")
    m = num_modes(architecture)
    if architecture == TWO_MODE:
        sq_mag, sq_ph, d_mag, d_ph = x[0:2], x[2:4], x[4:6], x[6:8]
        bs_th, bs_ph = x[8:9], x[9:10]
    else:
        sq_mag, sq_ph, d_mag, d_ph = x[0:3], x[3:6], x[6:9], None
        bs_th, bs_ph = x[9:12], x[12:15]
    return CircuitParams(
        architecture=architecture,
        squeeze_mag=sq_mag.copy(),
        squeeze_phase=sq_ph.copy(),
        disp_mag=d_mag.copy(),
        disp_phase=None if d_ph is None else d_ph.copy(),
        bs_theta=bs_th.copy(),
        bs_phi=bs_ph.copy(),
        pnr_pattern=pnr_pattern or default_pnr_pattern(architecture),
    )


# ---------------------------------------------------------------------------
# lossless evaluation
# ---------------------------------------------------------------------------

def _premeasurement_state(params: CircuitParams, cutoff: int) -> tuple[StateVector, float]:
    """State after sources and interferometer, plus the source-side squared norm."""
    state = vacuum(num_modes(params.architecture), cutoff)
    for i, alpha in enumerate(params.displacements()):
        state = gates.apply(gates.displace(alpha, cutoff), [i], state)
    for i, z in enumerate(params.squeezings()):
        state = gates.apply(gates.squeeze(z, cutoff), [i], state)
    norm_in = state.squared_norm()
    for (pair, theta, phi) in zip(BS_PAIRS[params.architecture], params.bs_theta, params.bs_phi):
        state = gates.apply(gates.beamsplitter(theta, phi, cutoff), list(pair), state)
    return state, norm_in


def run_gadget(params: CircuitParams, cutoff: int = 15) -> GadgetResult:
    """Evaluate the gadget: (normalized heralded state, joint probability).

    Raises ZeroNormError when the requested PNR pattern has (numerically)
    zero probability.
    """
    params.validate()
    state, norm_in = _premeasurement_state(params, cutoff)
    norm_out = state.squared_norm()
    for outcome in sorted(params.pnr_pattern, key=lambda o: -o.mode):
        state, _ = project_pnr(state, outcome)
    probability = state.squared_norm()
    heralded, _ = normalize(state)
    return GadgetResult(heralded, probability, norm_in, norm_out)


def _fast_fid_prob(
    x: np.ndarray,
    architecture: str,
    counts: tuple[int, ...],
    target: np.ndarray,
    cutoff: int,
) -> tuple[float, float, float, float]:
    """(fidelity, probability, norm_in, norm_out) for a packed parameter vector.

    Optimizer hot path; algebraically identical to :func:`run_gadget` but
    exploits the product structure of the sources and slices measured modes
    as early as possible.  The beamsplitters are exactly unitary, so
    norm_out coincides with norm_in.
    """
    c = cutoff
    ns = np.arange(c)
    w, v, vh = gates._bs_eig(c)
    if architecture == TWO_MODE:
        sq = x[0:2] * np.exp(1j * x[2:4])
        al = x[4:6] * np.exp(1j * x[6:8])
        th, ph = x[8], x[9]
        vs = [gates._prep_mode_vector(sq[i], al[i], c) for i in range(2)]
        norm_in = float(np.prod([np.vdot(u, u).real for u in vs]))
        phase = np.exp(1j * ph * ns)
        chi = np.kron(vs[0] * phase, vs[1])
        vec = np.exp(-1j * th * w) * (vh @ chi)
        out = v[ns * c + counts[0], :] @ vec
        out = out * phase.conj()
    else:
        sq = x[0:3] * np.exp(1j * x[3:6])
        al = x[6:9].astype(np.complex128)
        th, ph = x[9:12], x[12:15]
        vs = [gates._prep_mode_vector(sq[i], al[i], c) for i in range(3)]
        norm_in = float(np.prod([np.vdot(u, u).real for u in vs]))
        m1, m2 = counts
        # BS1 on (0, 1): the sources are still a product state
        phase = np.exp(1j * ph[0] * ns)
        chi = np.kron(vs[0] * phase, vs[1])
        chi = (v * np.exp(-1j * th[0] * w)) @ (vh @ chi)
        chi = chi.reshape(c, c) * phase.conj()[:, None]
        # BS2 on (1, 2): contract mode 2's vector into the eigenbasis rows,
        # and keep only the n2 = m2 slice of the output
        phase = np.exp(1j * ph[1] * ns)
        chi_b = chi * phase[None, :]
        wv = vh.reshape(c * c, c, c) @ vs[2]
        t2 = (wv @ chi_b.T) * np.exp(-1j * th[1] * w)[:, None]
        out2 = v[ns * c + m2, :] @ t2
        out2 = out2 * phase.conj()[:, None]
        # BS3 on (0, 1), then the n1 = m1 slice
        phase = np.exp(1j * ph[2] * ns)
        psi = out2.T * phase[:, None]
        vec = np.exp(-1j * th[2] * w) * (vh @ psi.reshape(-1))
        out = v[ns * c + m1, :] @ vec
        out = out * phase.conj()
    prob = float(np.vdot(out, out).real)
    if prob < ZERO_NORM_TOL:
        return 0.0, prob, norm_in, norm_in
    fid = float(abs(np.vdot(target, out)) ** 2 / prob)
    return fid, prob, norm_in, norm_in


# ---------------------------------------------------------------------------
# noisy evaluation
# ---------------------------------------------------------------------------

def _detector_weights(count: int, eta: float, cutoff: int, kmax: int) -> np.ndarray:
    """P(detect ``count`` | n = count + j arrived) for j = 0..  (loss before ideal PNR)."""
    jmax = min(cutoff - 1 - count, kmax)
    return np.array([
        comb(count + j, j) * (1.0 - eta) ** j * eta ** count for j in range(jmax + 1)
    ])


def run_gadget_noisy(
    params: CircuitParams,
    eta_src: float,
    eta_det: float,
    kmax: int | None = None,
    cutoff: int = 15,
    branch_tol: float = 1e-16,
) -> GadgetResult:
    """Gadget with a pure-loss channel after each source and before each PNR.

    Source loss is expanded as a Kraus sum over pure branches (the sources
    are a product state, so each branch stays pure through the unitary
    interferometer); detector loss commutes onto the state as a binomial
    smearing of the ideal projector.  The result is the conditional
    single-mode density matrix and the joint outcome probability.
    """
    params.validate()
    if not 0.0 < eta_src <= 1.0:
        raise EtaZeroError(f"source transmission {eta_src} outside (0, 1]")
    if not 0.0 < eta_det <= 1.0:
        raise EtaZeroError(f"detector transmission {eta_det} outside (0, 1]")
    c = cutoff
    m = num_modes(params.architecture)
    if kmax is None:
        kmax = c - 1
    ns = np.arange(c)
    w, v, vh = gates._bs_eig(c)

    vs = [gates._prep_mode_vector(z, a, c)
          for z, a in zip(params.squeezings(), params.displacements())]
    norm_in = float(np.prod([np.vdot(u, u).real for u in vs]))

    kraus = [loss_kraus(eta_src, k, c).matrix for k in range(kmax + 1)]
    mode_branches: list[list[np.ndarray]] = []
    for u in vs:
        branches = []
        for a_k in kraus:
            b = a_k @ u
            if np.vdot(b, b).real > branch_tol:
                branches.append(b)
        mode_branches.append(branches or [np.zeros(c, dtype=np.complex128)])

    # stack all Kraus-branch product states along a batch axis
    if m == 2:
        batch = np.stack([np.multiply.outer(b0, b1)
                          for b0 in mode_branches[0] for b1 in mode_branches[1]])
    else:
        batch = np.stack([np.multiply.outer(np.multiply.outer(b0, b1), b2)
                          for b0 in mode_branches[0]
                          for b1 in mode_branches[1]
                          for b2 in mode_branches[2]])

    for (pair, theta, phi) in zip(BS_PAIRS[params.architecture], params.bs_theta, params.bs_phi):
        batch = _apply_bs_batch(batch, pair, theta, phi, w, v, vh, ns)
    norm_out = float(np.sum(np.abs(batch) ** 2))

    counts = tuple(o.count for o in params.pnr_pattern)
    if m == 2:
        d1 = _detector_weights(counts[0], eta_det, c, kmax)
        sl = batch[:, :, counts[0]: counts[0] + d1.size]
        rho = np.einsum("baj,bkj,j->ak", sl, sl.conj(), d1, optimize=True)
    else:
        d1 = _detector_weights(counts[0], eta_det, c, kmax)
        d2 = _detector_weights(counts[1], eta_det, c, kmax)
        sl = batch[:, :, counts[0]: counts[0] + d1.size, counts[1]: counts[1] + d2.size]
        rho = np.einsum("bajl,bkjl,j,l->ak", sl, sl.conj(), d1, d2, optimize=True)

    probability = float(np.trace(rho).real)
    if probability < ZERO_NORM_TOL:
        raise ZeroNormError("post-selection pattern has zero probability under loss")
    return GadgetResult(DensityMatrix(rho / probability, 1, c), probability, norm_in, norm_out)


def _apply_bs_batch(batch, pair, theta, phi, w, v, vh, ns):
    """Apply B(theta, phi) on the mode pair of a batch of state tensors."""
    c = ns.size
    nb = batch.shape[0]
    axes = (pair[0] + 1, pair[1] + 1)
    phase = np.exp(1j * phi * ns)
    shape_first = [1] * batch.ndim
    shape_first[axes[0]] = c
    batch = batch * phase.reshape(shape_first)
    moved = np.moveaxis(batch, axes, (-2, -1))
    lead = moved.shape[:-2]
    flat = moved.reshape(-1, c * c).T
    flat = (v * np.exp(-1j * theta * w)) @ (vh @ flat)
    moved = flat.T.reshape(lead + (c, c))
    batch = np.moveaxis(moved, (-2, -1), axes)
    return batch * phase.conj().reshape(shape_first)


# ---------------------------------------------------------------------------
# table-style serialization
# ---------------------------------------------------------------------------

def params_csv_header(architecture: str) -> list[str]:
    _check_architecture(architecture)
    if architecture == TWO_MODE:
        return ["a", "r1", "phi_r1", "r2", "phi_r2",
                "d1", "phi_d1", "d2", "phi_d2", "theta", "phi"]
    return ["a", "r1", "phi_r1", "r2", "phi_r2", "r3", "phi_r3",
            "d1", "d2", "d3", "theta1", "phi1", "theta2", "phi2", "theta3", "phi3"]


def params_csv_row(params: CircuitParams, a_value: float) -> list[float]:
    """Row matching :func:`params_csv_header` (per-mode r/phi pairs, then
    displacements, then per-beamsplitter theta/phi pairs)."""
    params.validate()
    row = [a_value]
    for i in range(num_modes(params.architecture)):
        row += [params.squeeze_mag[i], params.squeeze_phase[i]]
    if params.architecture == TWO_MODE:
        for i in range(2):
            row += [params.disp_mag[i], params.disp_phase[i]]
    else:
        row += list(params.disp_mag)
    for i in range(len(params.bs_theta)):
        row += [params.bs_theta[i], params.bs_phi[i]]
    return [float(x) for x in row]


def params_to_json_dict(params: CircuitParams) -> dict:
    return {
        "architecture": params.architecture,
        "squeeze_mag": params.squeeze_mag.tolist(),
        "squeeze_phase": params.squeeze_phase.tolist(),
        "disp_mag": params.disp_mag.tolist(),
        "disp_phase": None if params.disp_phase is None else params.disp_phase.tolist(),
        "bs_theta": params.bs_theta.tolist(),
        "bs_phi": params.bs_phi.tolist(),
        "pnr_pattern": [[o.mode, o.count] for o in params.pnr_pattern],
    }


def params_from_json_dict(record: dict) -> CircuitParams:
    return CircuitParams(
        architecture=record["architecture"],
        squeeze_mag=record["squeeze_mag"],
        squeeze_phase=record["squeeze_phase"],
        disp_mag=record["disp_mag"],
        disp_phase=record["disp_phase"],
        bs_theta=record["bs_theta"],
        bs_phi=record["bs_phi"],
        pnr_pattern=tuple(PnrOutcome(m, n) for m, n in record["pnr_pattern"]),
    )
