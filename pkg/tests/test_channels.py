import numpy as np
import pytest

from cubicprep import gates
from cubicprep.channels import apply_loss, loss_kraus
from cubicprep.errors import EtaZeroError, ShapeMismatchError
from cubicprep.fock import DensityMatrix, StateVector, fock_basis_state, normalize, to_density


def coherent_state(alpha, cutoff):
    return StateVector(gates.displace(alpha, cutoff).matrix[:, 0])


def mean_photon(rho: DensityMatrix):
    n = np.arange(rho.cutoff)
    return float(np.real(np.sum(n * np.diag(rho.elements))))


def test_lossless_limit():
    c = 10
    assert np.allclose(loss_kraus(1.0, 0, c).matrix, np.eye(c))
    for k in (1, 3):
        assert np.allclose(loss_kraus(1.0, k, c).matrix, 0.0)


def test_single_photon_kraus():
    c = 8
    eta = 0.7
    a1 = loss_kraus(eta, 1, c).matrix
    out = a1 @ fock_basis_state((1,), c).amplitudes
    expect = np.zeros(c, dtype=complex)
    expect[0] = np.sqrt(1 - eta)
    assert np.allclose(out, expect, atol=1e-14)


def test_kraus_completeness_exact():
    c = 12
    for eta in (0.3, 0.6, 0.96):
        total = sum(
            loss_kraus(eta, k, c).matrix.conj().T @ loss_kraus(eta, k, c).matrix
            for k in range(c)
        )
        assert np.abs(total - np.eye(c)).max() < 1e-12


def test_kraus_eta_zero():
    with pytest.raises(EtaZeroError):
        loss_kraus(0.0, 1, 8)
    # k = 0 at eta = 0 is the projector onto vacuum
    a0 = loss_kraus(0.0, 0, 8).matrix
    assert a0[0, 0] == 1.0 and np.abs(a0).sum() == 1.0


def test_kraus_validation():
    with pytest.raises(EtaZeroError):
        loss_kraus(1.2, 0, 8)
    with pytest.raises(ShapeMismatchError):
        loss_kraus(0.5, 8, 8)


def test_identity_channel():
    psi = normalize(StateVector(np.arange(1, 7) + 0.5j))[0]
    rho = to_density(psi)
    out = apply_loss(rho, 0, 1.0)
    assert np.abs(out.elements - rho.elements).max() < 1e-14


def test_single_photon_mixture():
    c = 6
    eta = 0.42
    rho = to_density(fock_basis_state((1,), c))
    out = apply_loss(rho, 0, eta).elements
    expect = np.zeros((c, c), dtype=complex)
    expect[0, 0], expect[1, 1] = 1 - eta, eta
    assert np.abs(out - expect).max() < 1e-14


def test_coherent_state_covariance():
    # L(eta)|alpha><alpha| = |sqrt(eta) alpha><sqrt(eta) alpha|
    c, alpha, eta = 20, 0.9 + 0.4j, 0.55
    rho = to_density(coherent_state(alpha, c))
    out = apply_loss(rho, 0, eta)
    expect = to_density(coherent_state(np.sqrt(eta) * alpha, c))
    assert np.abs(out.elements - expect.elements).max() < 1e-6


def test_trace_preservation():
    rng = np.random.default_rng(0)
    c = 10
    psi = normalize(StateVector(rng.standard_normal(c) + 1j * rng.standard_normal(c)))[0]
    rho = to_density(psi)
    for eta in (0.2, 0.7, 0.99):
        out = apply_loss(rho, 0, eta)
        assert abs(out.trace() - 1.0) < 1e-8
        assert np.abs(out.elements - out.elements.conj().T).max() < 1e-12
        eigs = np.linalg.eigvalsh(out.elements)
        assert eigs.min() > -1e-10


def test_composition_rule():
    rng = np.random.default_rng(3)
    c = 9
    psi = normalize(StateVector(rng.standard_normal(c) + 1j * rng.standard_normal(c)))[0]
    rho = to_density(psi)
    twice = apply_loss(apply_loss(rho, 0, 0.8), 0, 0.7)
    once = apply_loss(rho, 0, 0.8 * 0.7)
    assert np.abs(twice.elements - once.elements).max() < 1e-8


def test_mean_photon_scaling():
    rng = np.random.default_rng(4)
    c = 12
    psi = normalize(StateVector(rng.standard_normal(c) + 1j * rng.standard_normal(c)))[0]
    rho = to_density(psi)
    before = mean_photon(rho)
    for eta in (0.35, 0.9):
        after = mean_photon(apply_loss(rho, 0, eta))
        assert abs(after - eta * before) < 1e-8


def test_vacuum_fixed_point():
    rho = to_density(fock_basis_state((0,), 7))
    out = apply_loss(rho, 0, 0.5)
    assert np.abs(out.elements - rho.elements).max() == 0.0


def test_multimode_loss_on_one_mode():
    # |1,1><1,1| with loss on mode 1 only
    c, eta = 5, 0.6
    rho = to_density(fock_basis_state((1, 1), c))
    out = apply_loss(rho, 1, eta)
    t = out.elements.reshape(c, c, c, c)
    assert np.isclose(np.real(t[1, 1, 1, 1]), eta)
    assert np.isclose(np.real(t[1, 0, 1, 0]), 1 - eta)
    assert abs(out.trace() - 1.0) < 1e-12


def test_apply_loss_validation():
    rho = to_density(fock_basis_state((0,), 5))
    with pytest.raises(EtaZeroError):
        apply_loss(rho, 0, 0.0)
    with pytest.raises(ShapeMismatchError):
        apply_loss(rho, 1, 0.5)
