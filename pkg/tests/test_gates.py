import numpy as np
import pytest
import scipy.linalg as sla

from cubicprep import gates
from cubicprep.errors import ModeOutOfRangeError, ShapeMismatchError, TruncationRiskWarning
from cubicprep.fock import StateVector, fock_basis_state, vacuum


def coherent_amplitudes(alpha, cutoff):
    n = np.arange(cutoff)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    return np.exp(-abs(alpha) ** 2 / 2) * alpha ** n / np.exp(log_fact / 2)


# -- squeeze --------------------------------------------------------------

def test_squeeze_zero_is_identity():
    assert np.allclose(gates.squeeze(0.0, 12).matrix, np.eye(12), atol=1e-14)


def test_squeezed_vacuum_amplitude():
    s = gates.squeeze(0.5, 15).matrix
    # analytic oracle: <0|S(r)|0> = cosh(r)^(-1/2) = 0.94171...
    assert np.isclose(s[0, 0], 1 / np.sqrt(np.cosh(0.5)), atol=1e-12)


def test_squeezed_vacuum_parity():
    for r in (0.2, 0.5, 1.0):
        col = gates.squeeze(r, 15).matrix[:, 0]
        assert np.allclose(col[1::2], 0.0, atol=1e-14)


def test_squeeze_matches_large_space_exponential():
    z = 0.5 * np.exp(0.9j)
    big = 90
    a = gates.ladder(big)
    ad = a.conj().T
    ref = sla.expm((np.conj(z) * a @ a - z * ad @ ad) / 2)
    assert np.abs(gates.squeeze(z, 15).matrix - ref[:15, :15]).max() < 1e-12


def test_squeeze_truncation_warning():
    with pytest.warns(TruncationRiskWarning):
        gates.squeeze(1.8, 15)


# -- displace -------------------------------------------------------------

def test_displace_zero_is_identity():
    assert np.allclose(gates.displace(0.0, 12).matrix, np.eye(12), atol=1e-14)


def test_displace_coherent_column():
    alpha = 0.5
    col = gates.displace(alpha, 15).matrix[:, 0]
    assert np.allclose(col[:4], coherent_amplitudes(alpha, 4), atol=1e-12)


def test_displace_inverse_pair_low_sectors():
    prod = gates.displace(0.5, 25).matrix @ gates.displace(-0.5, 25).matrix
    assert np.abs((prod - np.eye(25))[:10, :10]).max() < 1e-8


def test_displace_matches_large_space_exponential():
    alpha = 0.8 * np.exp(-0.4j)
    big = 90
    a = gates.ladder(big)
    ref = sla.expm(alpha * a.conj().T - np.conj(alpha) * a)
    assert np.abs(gates.displace(alpha, 15).matrix - ref[:15, :15]).max() < 1e-12


# -- beamsplitter ---------------------------------------------------------

def test_beamsplitter_zero_is_identity():
    assert np.allclose(gates.beamsplitter(0.0, 1.3, 6).matrix, np.eye(36), atol=1e-14)


def test_beamsplitter_single_photon_action():
    # generator exponential on the one-photon block:
    # B|1,0> = cos(theta)|1,0> + e^{i phi} sin(theta)|0,1>
    theta, phi, c = 0.6, 0.8, 8
    out = gates.apply(gates.beamsplitter(theta, phi, c), [0, 1], fock_basis_state((1, 0), c))
    assert np.isclose(out.amplitudes[1, 0], np.cos(theta), atol=1e-12)
    assert np.isclose(out.amplitudes[0, 1], np.exp(1j * phi) * np.sin(theta), atol=1e-12)
    out01 = gates.apply(gates.beamsplitter(theta, phi, c), [0, 1], fock_basis_state((0, 1), c))
    assert np.isclose(out01.amplitudes[1, 0], -np.exp(-1j * phi) * np.sin(theta), atol=1e-12)


def test_beamsplitter_number_conservation():
    c = 9
    out = gates.apply(gates.beamsplitter(0.7, 0.2, c), [0, 1], fock_basis_state((1, 2), c))
    total = 0.0
    for i in range(c):
        for j in range(c):
            if abs(out.amplitudes[i, j]) > 1e-14:
                assert i + j == 3
                total += abs(out.amplitudes[i, j]) ** 2
    assert np.isclose(total, 1.0, atol=1e-12)


def test_beamsplitter_matches_expm():
    theta, phi, c = 0.7, 1.1, 15
    a = gates.ladder(c)
    ad = a.conj().T
    gen = theta * (np.exp(1j * phi) * np.kron(a, ad) - np.exp(-1j * phi) * np.kron(ad, a))
    assert np.abs(gates.beamsplitter(theta, phi, c).matrix - sla.expm(gen)).max() < 1e-12


# -- cubic phase ----------------------------------------------------------

def test_cubic_phase_zero_is_identity():
    assert np.allclose(gates.cubic_phase(0.0, 10).matrix, np.eye(10), atol=1e-14)


def test_cubic_phase_unitary_low_block():
    v = gates.cubic_phase(0.04, 25).matrix
    dev = v.conj().T @ v - np.eye(25)
    assert np.abs(dev[:5, :5]).max() < 1e-6


def test_cubic_phase_position_oracle():
    # <x|V(gamma)|psi> must equal e^{i gamma x^3/2} <x|psi> pointwise
    gamma, c = 0.02, 40
    xs = np.linspace(-5, 5, 201)
    waves = gates.position_wavefunctions(c, xs)
    psi = np.zeros(c, dtype=complex)
    psi[0] = psi[1] = 1 / np.sqrt(2)
    lhs = (gates.cubic_phase(gamma, c).matrix @ psi) @ waves
    rhs = np.exp(0.5j * gamma * xs ** 3) * (psi @ waves)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_cubic_phase_matches_expm():
    c = 25
    x3 = np.linalg.matrix_power(gates.position_op(c), 3)
    assert np.abs(gates.cubic_phase(0.04, c).matrix - sla.expm(0.5j * 0.04 * x3)).max() < 1e-12


# -- controlled X ---------------------------------------------------------

def test_controlled_x_unitary_low_block():
    c = 25
    cx = gates.controlled_x(c).matrix
    dev = cx.conj().T @ cx - np.eye(c * c)
    idx = np.array([i * c + j for i in range(5) for j in range(5)])
    assert np.abs(dev[np.ix_(idx, idx)]).max() < 1e-6


def test_controlled_x_heisenberg_action():
    c = 40
    cx = gates.controlled_x(c).matrix
    x1 = np.kron(gates.position_op(c), np.eye(c))
    x2 = np.kron(np.eye(c), gates.position_op(c))
    dev = cx.conj().T @ x2 @ cx - (x2 + x1)
    idx = np.array([i * c + j for i in range(5) for j in range(5)])
    assert np.abs(dev[np.ix_(idx, idx)]).max() < 1e-7


def test_controlled_x_commutes_with_x1():
    c = 25
    cx = gates.controlled_x(c).matrix
    x1 = np.kron(gates.position_op(c), np.eye(c))
    comm = cx @ x1 - x1 @ cx
    idx = np.array([i * c + j for i in range(8) for j in range(8)])
    assert np.abs(comm[np.ix_(idx, idx)]).max() < 1e-8


def test_controlled_x_matches_expm():
    c = 18
    gen = -0.5j * np.kron(gates.position_op(c), gates.momentum_op(c))
    assert np.abs(gates.controlled_x(c).matrix - sla.expm(gen)).max() < 1e-12


# -- apply ----------------------------------------------------------------

def test_apply_identity():
    state = fock_basis_state((1, 2), 6)
    out = gates.apply(gates.identity_gate(6), [0], state)
    assert np.allclose(out.amplitudes, state.amplitudes)


def test_apply_displacement_on_second_mode():
    alpha, c = 0.5, 15
    out = gates.apply(gates.displace(alpha, c), [1], vacuum(2, c))
    expect = np.outer(coherent_amplitudes(0.0, c), coherent_amplitudes(alpha, c))
    expect[0, :] = coherent_amplitudes(alpha, c)
    expect[1:, :] = 0.0
    assert np.abs(out.amplitudes - expect).max() < 1e-12


def test_apply_disjoint_modes_commute():
    c = 10
    s = gates.squeeze(0.3, c)
    d = gates.displace(0.4 + 0.2j, c)
    a = gates.apply(d, [1], gates.apply(s, [0], vacuum(2, c)))
    b = gates.apply(s, [0], gates.apply(d, [1], vacuum(2, c)))
    assert np.abs(a.amplitudes - b.amplitudes).max() < 1e-13


def test_apply_two_mode_gate_mode_order():
    # applying on [1, 0] must swap the roles of the two modes
    c = 7
    bs = gates.beamsplitter(0.5, 0.3, c)
    state = fock_basis_state((1, 0), c)
    swapped = gates.apply(bs, [1, 0], state)
    direct = gates.apply(bs, [0, 1], fock_basis_state((0, 1), c))
    assert np.abs(swapped.amplitudes.T - direct.amplitudes).max() < 1e-13


def test_apply_validation():
    with pytest.raises(ShapeMismatchError):
        gates.apply(gates.identity_gate(6), [0, 1], vacuum(2, 6))
    with pytest.raises(ShapeMismatchError):
        gates.apply(gates.identity_gate(5), [0], vacuum(2, 6))
    with pytest.raises(ModeOutOfRangeError):
        gates.apply(gates.identity_gate(6), [2], vacuum(2, 6))
    with pytest.raises(ModeOutOfRangeError):
        gates.apply(gates.beamsplitter(0.1, 0.0, 6), [0, 0], vacuum(2, 6))


# -- invariants -----------------------------------------------------------

def test_unitarity_number_conserving_gates_everywhere():
    c = 15
    for gate in (gates.beamsplitter(1.2, 0.7, c), gates.cubic_phase(0.05, c),
                 gates.controlled_x(c)):
        g = gate.matrix
        assert np.abs(g.conj().T @ g - np.eye(g.shape[0])).max() < 1e-6


def test_unitarity_source_gates_with_headroom():
    # squeeze/displace blocks are exact-gate elements: unitary on low Fock
    # sectors once the cutoff leaves room for the gate's spread
    c = 60
    s = gates.squeeze(0.5 * np.exp(0.3j), c).matrix
    dev = s.conj().T @ s - np.eye(c)
    assert np.abs(dev[:10, :10]).max() < 1e-6
    d = gates.displace(1.0 * np.exp(-0.7j), c).matrix
    dev = d.conj().T @ d - np.eye(c)
    assert np.abs(dev[:10, :10]).max() < 1e-6


def test_generator_consistency_half_parameter():
    c = 60
    for z in (0.5, 0.8 * np.exp(0.4j)):
        half = gates.squeeze(z / 2, c).matrix
        assert np.abs((half @ half - gates.squeeze(z, c).matrix)[:10, :10]).max() < 1e-8
    half = gates.displace(0.5, c).matrix
    assert np.abs((half @ half - gates.displace(1.0, c).matrix)[:10, :10]).max() < 1e-8
    c = 12
    half = gates.beamsplitter(0.4, 0.9, c).matrix
    assert np.abs(half @ half - gates.beamsplitter(0.8, 0.9, c).matrix).max() < 1e-8


def test_phase_convention_magnitude_phase_split():
    # z = r e^{i phi} must reproduce  R(phi/2) S(r) R(phi/2)^dag
    r, phi, c = 0.4, 1.1, 15
    ph = np.exp(1j * (phi / 2) * np.arange(c))
    direct = gates.squeeze(r * np.exp(1j * phi), c).matrix
    rebuilt = (ph[:, None] * gates.squeeze(r, c).matrix) * ph.conj()[None, :]
    assert np.abs(direct - rebuilt).max() < 1e-13


# -- position representation ----------------------------------------------

def test_position_wavefunctions_orthonormal():
    xs = np.linspace(-12, 12, 2001)
    waves = gates.position_wavefunctions(10, xs)
    gram = waves @ waves.T * (xs[1] - xs[0])
    assert np.abs(gram - np.eye(10)).max() < 1e-10


def test_position_wavefunctions_ladder_recurrence():
    # x psi_n = sqrt(n+1) psi_{n+1} + sqrt(n) psi_{n-1}
    xs = np.linspace(-6, 6, 101)
    waves = gates.position_wavefunctions(8, xs)
    for n in range(1, 7):
        lhs = xs * waves[n]
        rhs = np.sqrt(n + 1) * waves[n + 1] + np.sqrt(n) * waves[n - 1]
        assert np.abs(lhs - rhs).max() < 1e-12


def test_squeezing_db_convention():
    assert abs(gates.squeezing_db(0.771) - 6.7) < 0.005
    assert abs(gates.squeezing_db(0.5872) - 5.1) < 0.005
