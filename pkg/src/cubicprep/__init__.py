"""Truncated Fock-space simulation and training of photonic gadgets that
herald weak cubic-phase resource states, with loss analysis, resource-farm
planning and gate-teleportation verification."""

from . import channels, errors, farm, fock, gadgets, gates, metrics, optimize, teleport
from .fock import DensityMatrix, PnrOutcome, StateVector

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "PnrOutcome",
    "StateVector",
    "channels",
    "errors",
    "farm",
    "fock",
    "gadgets",
    "gates",
    "metrics",
    "optimize",
    "teleport",
]
