"""Per-coordinate forward/backward transformation families.

A family assigns one of three kinds to each coordinate:

``additive``
    forward ``x + a*eps``, backward ``x - a*eps``, eps in (0, inf).
``log-additive``
    forward ``x * eps**a``, backward ``x / eps**a``, x > 0, eps in (0, 1).
``multiplicative``
    forward ``x * s(eps)``, backward ``x / s(eps)`` with
    ``s(eps) = sign(eps) * |eps|**a``, x != 0, eps in (-1, 1) without 0.

All coordinates share one scalar ``eps``, so the admissible eps-domain of a
mixed family is the intersection of the per-kind domains.  A move indicator
``z`` holds +1 (forward), -1 (backward) or 0 (hold) per coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tmcmc.errors import DomainError

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"
LOG_ADDITIVE = "log-additive"
KINDS = (ADDITIVE, MULTIPLICATIVE, LOG_ADDITIVE)


@dataclass(frozen=True)
class EpsDomain:
    """Open interval ``(low, high)``, optionally with zero removed."""

    low: float
    high: float
    exclude_zero: bool = False

    def __contains__(self, eps: float) -> bool:
        if not (self.low < eps < self.high):
            return False
        return not (self.exclude_zero and eps == 0.0)

    def intersect(self, other: EpsDomain) -> EpsDomain:
        low, high = max(self.low, other.low), min(self.high, other.high)
        if low >= high:
            raise DomainError("transformation kinds have disjoint eps-domains")
        return EpsDomain(low, high, self.exclude_zero or other.exclude_zero)


_DOMAINS = {
    ADDITIVE: EpsDomain(0.0, math.inf),
    MULTIPLICATIVE: EpsDomain(-1.0, 1.0, exclude_zero=True),
    LOG_ADDITIVE: EpsDomain(0.0, 1.0),
}


@dataclass(frozen=True)
class TransformFamily:
    """Per-coordinate transformation kinds and positive scales.

    Args:
        kinds: one kind name per coordinate (see module docstring).
        scales: positive scale per coordinate.
    """

    kinds: tuple[str, ...]
    scales: np.ndarray
    domain: EpsDomain = field(init=False)

    def __post_init__(self):
        kinds = tuple(self.kinds)
        scales = np.array(self.scales, dtype=float).reshape(-1)
        if len(kinds) == 0:
            raise ValueError("family needs at least one coordinate")
        if len(kinds) != scales.size:
            raise ValueError(f"{len(kinds)} kinds but {scales.size} scales")
        unknown = set(kinds) - set(KINDS)
        if unknown:
            raise ValueError(f"unknown transformation kinds: {sorted(unknown)}")
        if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
            raise ValueError("scales must be finite and positive")
        scales.setflags(write=False)
        domain = _DOMAINS[kinds[0]]
        for kind in set(kinds[1:]):
            domain = domain.intersect(_DOMAINS[kind])
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "domain", domain)
        kind_arr = np.array(kinds)
        for name, kind in (("_add", ADDITIVE), ("_mul", MULTIPLICATIVE), ("_log", LOG_ADDITIVE)):
            object.__setattr__(self, name, kind_arr == kind)
        object.__setattr__(self, "_pure_additive", bool(np.all(kind_arr == ADDITIVE)))

    @classmethod
    def additive(cls, scales: Sequence[float] | np.ndarray) -> TransformFamily:
        scales = np.atleast_1d(np.asarray(scales, dtype=float))
        return cls((ADDITIVE,) * scales.size, scales)

    @classmethod
    def multiplicative(cls, k: int, scales=None) -> TransformFamily:
        return cls((MULTIPLICATIVE,) * k, np.ones(k) if scales is None else scales)

    @classmethod
    def log_additive(cls, k: int, scales=None) -> TransformFamily:
        return cls((LOG_ADDITIVE,) * k, np.ones(k) if scales is None else scales)

    @property
    def dim(self) -> int:
        return len(self.kinds)

    @property
    def is_additive(self) -> bool:
        return self._pure_additive

    def check_state(self, x: np.ndarray, z: np.ndarray | None = None) -> None:
        """Raise `DomainError` if a moved coordinate lies in a null set."""
        moved = np.ones(self.dim, bool) if z is None else z != 0
        if np.any(x[self._mul & moved] == 0.0):
            raise DomainError("multiplicative coordinate is exactly 0")
        if np.any(x[self._log & moved] <= 0.0):
            raise DomainError("log-additive coordinate must be positive")

    def move(self, x: np.ndarray, eps: float, z: np.ndarray) -> tuple[np.ndarray, float]:
        """Unchecked `apply_move`; callers guarantee valid ``eps`` and ``z``."""
        if self._pure_additive:
            return x + (z * eps) * self.scales, 0.0
        x_new = x + np.where(self._add, z * eps * self.scales, 0.0)
        mult = self._mul | self._log
        if not np.any(mult):
            return x_new, 0.0
        # |s(eps)|**(z) factor on the log scale; sign(eps)**2 = 1 for backward moves
        log_factor = z * self.scales * math.log(abs(eps))
        factor = np.exp(log_factor)
        if eps < 0:
            factor = np.where(z != 0, -factor, factor)
        x_new = np.where(mult, x * factor, x_new)
        return x_new, float(np.sum(log_factor[mult]))


def check_indicator(z, k: int) -> np.ndarray:
    z = np.asarray(z)
    if z.shape != (k,):
        raise ValueError(f"move indicator must have shape ({k},), got {z.shape}")
    if not np.all(np.isin(z, (-1, 0, 1))):
        raise ValueError("move indicator entries must be -1, 0 or +1")
    if not np.any(z != 0):
        raise ValueError("the all-hold move indicator is not a move")
    return z.astype(np.int8)


def apply_move(x, eps: float, z, fam: TransformFamily) -> tuple[np.ndarray, float]:
    """Apply the move type ``z`` with innovation ``eps`` to state ``x``.

    Returns:
        The proposed state and the log-Jacobian of the map ``x -> x'``.

    Raises:
        DomainError: ``eps`` outside the family's eps-domain, or a moved
            coordinate in a null set (multiplicative zero, nonpositive
            log-additive value).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (fam.dim,):
        raise ValueError(f"state must have shape ({fam.dim},), got {x.shape}")
    z = check_indicator(z, fam.dim)
    if eps not in fam.domain:
        raise DomainError(f"eps={eps!r} outside {fam.domain}")
    fam.check_state(x, z)
    return fam.move(x, float(eps), z)


def conjugate(z) -> np.ndarray:
    """Swap forward and backward on every active coordinate."""
    return -np.asarray(z)
