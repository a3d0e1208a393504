"""Closed-form bounds on the probability of a short proposal displacement.

For a proposal ``x'`` from ``x`` these bound ``P(||x' - x|| < c)``, which in
turn bounds the acceptance rate from above for a uniformly continuous
target.  ``c`` stands in for the (non-constructive) continuity modulus and
is supplied by the caller; ``K`` is a lower bound on the per-coordinate
scales.

The normal CDF is evaluated through ``scipy.special.ndtr`` (erfc-based in the
lower tail), so probabilities around 1e-19 keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from scipy.special import erf, ndtr


@dataclass(frozen=True)
class BoundInput:
    c: float
    K: float
    k: int
    dt: Optional[float] = None
    lam: float = 0.0

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError("c must be nonnegative")
        if not self.K > 0:
            raise ValueError("K must be positive")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.lam >= 0:
            raise ValueError("lambda must be nonnegative")


def rwmh_displacement_bound(b: BoundInput) -> float:
    """Normal approximation to P(chi2_k < c^2/K^2) for a joint random walk."""
    return float(ndtr((b.c**2 / b.K**2 - b.k) / math.sqrt(2 * b.k)))


def tmcmc_displacement_bound(b: BoundInput) -> float:
    """``2*Phi(c / (sqrt(k) K)) - 1`` for additive singleton-eps moves."""
    # 2*Phi(t) - 1 == erf(t / sqrt 2), without cancellation near t = 0
    return float(erf(b.c / (math.sqrt(b.k) * b.K) / math.sqrt(2)))


def hmc_displacement_bound(b: BoundInput) -> float:
    """Normal approximation to a noncentral chi2_k(lam) CDF at c^2/dt^2."""
    if b.dt is None:
        raise ValueError("hmc bound needs dt")
    arg = (b.c**2 / b.dt**2 - (b.k + b.lam)) / math.sqrt(2 * (b.k + 2 * b.lam))
    return float(ndtr(arg))


def argument_ratio(b: BoundInput) -> float:
    """Ratio of the random-walk CDF argument to the TMCMC one.

    Equals ``(c^2/K^2 - k) * K / (c * sqrt 2)``; tends to -inf with k.
    """
    return (b.c**2 / b.K**2 - b.k) * b.K / (b.c * math.sqrt(2))


BOUND_COLUMNS = ("k", "rwmh", "tmcmc", "hmc", "argument_ratio")


def bound_sweep(k_range: Iterable[int], template: BoundInput) -> list[dict]:
    """One row of bounds per dimension in ``k_range``.

    ``hmc`` is None when the template has no ``dt``; ``argument_ratio`` is
    None when ``c == 0``.
    """
    rows = []
    for k in k_range:
        b = BoundInput(template.c, template.K, int(k), template.dt, template.lam)
        rows.append(
            {
                "k": b.k,
                "rwmh": rwmh_displacement_bound(b),
                "tmcmc": tmcmc_displacement_bound(b),
                "hmc": hmc_displacement_bound(b) if b.dt is not None else None,
                "argument_ratio": argument_ratio(b) if b.c > 0 else None,
            }
        )
    if not rows:
        raise ValueError("k_range is empty")
    return rows
