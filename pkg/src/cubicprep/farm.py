"""Resource-farm success probability and the sequential photon-subtraction
baseline it is compared against.

A farm of n identical gadgets, each heralding with probability p, succeeds
when any gadget fires: P(F) = 1 - (1-p)^n.  All evaluations run in the log
domain so tiny p and huge n stay accurate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePError, TruncationRiskWarning, UnboundedError

#: largest gadget count the farm math will report
N_CAP = 10 ** 9


@dataclass(frozen=True)
class FarmSpec:
    p: float
    epsilon: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DegeneratePError("per-gadget probability must lie in (0, 1)")
        if not 0.0 < self.epsilon < 1.0:
            raise DegeneratePError("failure budget must lie in (0, 1)")
        if self.n < 1:
            raise UnboundedError("need at least one gadget")


def farm_success(p: float, n: int) -> float:
    """P(F) = 1 - (1-p)^n, evaluated stably."""
    if not 0.0 <= p <= 1.0:
        raise DegeneratePError(f"probability {p} outside [0, 1]")
    if n < 0:
        raise UnboundedError("gadget count must be non-negative")
    if p == 1.0:
        return 1.0 if n >= 1 else 0.0
    return -np.expm1(n * np.log1p(-p))


def min_gadgets(p: float, epsilon: float) -> int:
    """Smallest n with farm_success(p, n) >= 1 - epsilon.

    Computed as ceil(log eps / log(1-p)) with a +-1 floating-point guard.
    """
    if not 0.0 < epsilon < 1.0:
        raise DegeneratePError(f"failure budget {epsilon} outside (0, 1)")
    if p == 1.0:
        return 1
    if not 0.0 < p < 1.0:
        raise DegeneratePError(f"probability {p} is degenerate; no finite farm exists")
    n = int(np.ceil(np.log(epsilon) / np.log1p(-p)))
    n = max(n, 1)
    while n > 1 and farm_success(p, n - 1) >= 1.0 - epsilon:
        n -= 1
    while farm_success(p, n) < 1.0 - epsilon:
        n += 1
        if n > N_CAP:
            raise UnboundedError(f"more than {N_CAP} gadgets required")
    if n > N_CAP:
        raise UnboundedError(f"more than {N_CAP} gadgets required")
    return n


def tradeoff_table(
    n_values,
    fixed_p: float | None = None,
    fixed_epsilon: float | None = None,
) -> list[tuple[int, float, float]]:
    """Rows (n, epsilon, p) along one section of the trade-off surface.

    With ``fixed_p``: epsilon(n) = (1-p)^n.  With ``fixed_epsilon``:
    p(n) = 1 - epsilon^(1/n).  Exactly one of the two must be given.
    """
    if (fixed_p is None) == (fixed_epsilon is None):
        raise DegeneratePError("fix exactly one of p or epsilon")
    rows = []
    for n in n_values:
        n = int(n)
        if n < 1 or n > N_CAP:
            raise UnboundedError(f"gadget count {n} outside [1, {N_CAP}]")
        if fixed_p is not None:
            if not 0.0 < fixed_p < 1.0:
                raise DegeneratePError("fixed p must lie in (0, 1)")
            eps = float(np.exp(n * np.log1p(-fixed_p)))
            rows.append((n, eps, fixed_p))
        else:
            if not 0.0 < fixed_epsilon < 1.0:
                raise DegeneratePError("fixed epsilon must lie in (0, 1)")
            p = float(-np.expm1(np.log(fixed_epsilon) / n))
            rows.append((n, fixed_epsilon, p))
    return rows


def subtraction_probability(
    theta: float,
    mean_photon: float,
    mean_photon_weighted: bool = True,
) -> float:
    """Success probability of one weak-beamsplitter photon subtraction.

    Tapping a state with exp[theta(a^dag b - a b^dag)] and heralding one
    photon succeeds with ||theta a|psi>||^2 / N^2 =
    theta^2 <n> / (1 + theta^2 <n>).  With ``mean_photon_weighted=False``
    the <n> numerator factor is dropped, i.e. the probability is read as
    theta^2 / N^2.  Both readings agree at <n> ~ 1, the regime the
    order-of-magnitude baseline lives in.
    """
    if abs(theta) > 0.3:
        warnings.warn(
            f"theta = {theta:.3g} is outside the weak-coupling regime of the "
            "first-order expansion", TruncationRiskWarning, stacklevel=2)
    if mean_photon < 0:
        raise DegeneratePError("mean photon number must be non-negative")
    t2 = theta * theta
    denom = 1.0 + t2 * mean_photon
    return t2 * mean_photon / denom if mean_photon_weighted else t2 / denom


def sequential_subtraction_probability(
    theta: float,
    mean_photon: float,
    events: int = 3,
    mean_photon_weighted: bool = True,
) -> float:
    """Net probability of ``events`` successive subtractions at fixed <n>."""
    if events < 1:
        raise DegeneratePError("need at least one subtraction event")
    return subtraction_probability(theta, mean_photon, mean_photon_weighted) ** events


def theta_for_transmission(transmission: float) -> float:
    """Beamsplitter mixing angle whose single-photon transmission is given:
    T = cos^2(theta)."""
    if not 0.0 <= transmission <= 1.0:
        raise DegeneratePError(f"transmission {transmission} outside [0, 1]")
    return float(np.arccos(np.sqrt(transmission)))
