"""Pure-loss bosonic channel via Kraus operators.

The Kraus operator of order k at transmission eta acts on Fock states as

    A_k |n> = sqrt( C(n, k) (1-eta)^k eta^(n-k) ) |n-k>,

which is the matrix ((1-eta)/eta)^{k/2} a^k / sqrt(k!) eta^{n_op/2} written
element-wise (binomially stable for small eta).  Completeness
sum_k A_k^dag A_k = 1 then holds exactly on every retained Fock level.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import EtaZeroError, ShapeMismatchError
from .fock import DensityMatrix
from .gates import GateMatrix


def loss_kraus(eta: float, k: int, cutoff: int) -> GateMatrix:
    """k-photon-loss Kraus operator of the channel L(eta)."""
    if not 0.0 <= eta <= 1.0:
        raise EtaZeroError(f"transmission {eta} outside [0, 1]")
    if not 0 <= k < cutoff:
        raise ShapeMismatchError(f"Kraus order {k} outside [0, {cutoff})")
    if eta == 0.0 and k > 0:
        raise EtaZeroError("Kraus formula is singular at eta = 0 for k > 0")
    mat = np.zeros((cutoff, cutoff), dtype=np.complex128)
    for n in range(k, cutoff):
        mat[n - k, n] = np.sqrt(comb(n, k) * (1.0 - eta) ** k * eta ** (n - k))
    return GateMatrix(mat, 1, cutoff)


def apply_loss(rho: DensityMatrix, mode: int, eta: float, kmax: int | None = None) -> DensityMatrix:
    """L(eta)[rho] on one mode: sum_k A_k rho A_k^dag.

    ``kmax`` truncates the Kraus sum (default cutoff - 1, which makes the
    channel exactly trace preserving on the truncated space).
    """
    if not 0.0 < eta <= 1.0:
        raise EtaZeroError(f"transmission {eta} outside (0, 1]")
    if not 0 <= mode < rho.num_modes:
        raise ShapeMismatchError(f"mode {mode} out of range")
    c = rho.cutoff
    m = rho.num_modes
    if kmax is None:
        kmax = c - 1
    tensor = rho.elements.reshape((c,) * (2 * m))
    out = np.zeros_like(tensor)
    for k in range(kmax + 1):
        a_k = loss_kraus(eta, k, c).matrix
        # contract the ket index of `mode`, then the bra index
        tmp = np.tensordot(a_k, tensor, axes=(1, mode))
        tmp = np.moveaxis(tmp, 0, mode)
        tmp = np.tensordot(a_k.conj(), tmp, axes=(1, m + mode))
        tmp = np.moveaxis(tmp, 0, m + mode)
        out += tmp
    dim = c ** m
    return DensityMatrix(out.reshape(dim, dim), m, c)
