"""Move-type sampling and move-probability ratios.

Two ways to specify the law of the move indicator ``z``:

* `MoveProbabilities` -- independent per-coordinate forward/backward
  probabilities ``p_i``/``q_i``, holds with probability ``1 - p_i - q_i``, and
  the all-hold outcome rejected.  Scales to any dimension.
* `MoveTable` -- explicit probabilities over the ``2**k`` subsets of
  backward-moved coordinates (no holds), for small ``k``.

Both expose ``sample(rng)`` and ``log_ratio(z)`` so kernels can take either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

MAX_REDRAWS = 1_000_000
MAX_TABLE_DIM = 16


@dataclass(frozen=True)
class MoveProbabilities:
    """Per-coordinate forward (``p``) and backward (``q``) probabilities."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        q = np.array(self.q, dtype=float).reshape(-1)
        if p.shape != q.shape:
            raise ValueError("p and q must have the same length")
        if np.any(p < 0) or np.any(q < 0) or np.any(p + q > 1 + 1e-12):
            raise ValueError("need 0 <= p_i, q_i and p_i + q_i <= 1")
        if not np.any(p + q > 0):
            raise ValueError("at least one coordinate must move with positive probability")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "_cum", p + q)
        object.__setattr__(self, "_no_holds", bool(np.all(np.abs(p + q - 1) <= 1e-12)))
        with np.errstate(divide="ignore"):
            log_qp = np.log(q) - np.log(p)
        object.__setattr__(self, "_log_qp", log_qp)

    @classmethod
    def symmetric(cls, k: int) -> MoveProbabilities:
        """Fair forward/backward coin per coordinate, no holds."""
        half = np.full(k, 0.5)
        return cls(half, half)

    @classmethod
    def from_sign_pattern(cls, signs: Sequence[int], bias: float = 0.9) -> MoveProbabilities:
        """Direction-biased probabilities for correlated coordinates.

        Coordinates sharing a sign in ``signs`` lean the same way: ``+1``
        coordinates go forward with probability ``bias`` and ``-1``
        coordinates backward with probability ``bias``.  With this law the
        moves pushing positively correlated coordinates together (and the
        conjugates) are the likely ones.
        """
        signs = np.asarray(signs)
        if not np.all(np.isin(signs, (-1, 1))):
            raise ValueError("signs must be +1 or -1")
        if not 0.0 < bias < 1.0:
            raise ValueError("bias must lie in (0, 1)")
        p = np.where(signs > 0, bias, 1.0 - bias)
        return cls(p, 1.0 - p)

    @property
    def dim(self) -> int:
        return self.p.size

    @property
    def has_holds(self) -> bool:
        return not self._no_holds

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        for _ in range(MAX_REDRAWS):
            u = rng.random(self.dim)
            z = (u < self.p).astype(np.int8) - ((u >= self.p) & (u < self._cum)).astype(np.int8)
            if self._no_holds or z.any():
                return z
        raise RuntimeError(
            f"no non-hold move in {MAX_REDRAWS} draws; p_i + q_i is too small everywhere"
        )

    def log_ratio(self, z: np.ndarray) -> float:
        # sum over forward coords of log(q/p) minus the same over backward coords
        terms = self._log_qp[z != 0] * z[z != 0]
        if not np.all(np.isfinite(terms)):
            raise ValueError(
                "move has zero-probability conjugate (or itself has probability 0); "
                "unbalanced move design"
            )
        return float(np.sum(terms))

    def prob_unnormalized(self, z: np.ndarray) -> float:
        """Product-law probability of ``z`` before rejecting the all-hold move."""
        probs = np.where(z > 0, self.p, np.where(z < 0, self.q, 1.0 - self._cum))
        return float(np.prod(probs))


def _subset_index(z: np.ndarray) -> int:
    # bit i set <=> coordinate i moves backward
    return int(np.dot(z < 0, 1 << np.arange(z.size)))


@dataclass(frozen=True)
class MoveTable:
    """Explicit probabilities over the subsets of backward-moved coordinates.

    ``probs[idx]`` is the probability of the move whose backward set has
    bitmask ``idx`` (bit ``i`` for coordinate ``i``); every other coordinate
    moves forward.
    """

    probs: np.ndarray
    _indicators: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float).reshape(-1)
        k = int(round(math.log2(probs.size))) if probs.size > 0 else -1
        if k < 1 or 2**k != probs.size:
            raise ValueError("table length must be 2**k with k >= 1")
        if k > MAX_TABLE_DIM:
            raise ValueError(f"explicit move tables support k <= {MAX_TABLE_DIM}")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("table probabilities must be nonnegative and sum to 1")
        probs.setflags(write=False)
        bits = (np.arange(2**k)[:, None] >> np.arange(k)) & 1
        indicators = (1 - 2 * bits).astype(np.int8)
        indicators.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_indicators", indicators)
        object.__setattr__(self, "_cdf", np.cumsum(probs))

    @classmethod
    def from_subsets(cls, k: int, subset_probs: Mapping[frozenset | tuple, float]) -> MoveTable:
        """Build from ``{backward_subset: probability}`` with 0-based coordinates."""
        probs = np.zeros(2**k)
        for subset, prob in subset_probs.items():
            idx = sum(1 << i for i in subset)
            probs[idx] = prob
        return cls(probs)

    @classmethod
    def from_probabilities(cls, probs: MoveProbabilities) -> MoveTable:
        """Tabulate a hold-free per-coordinate law."""
        if probs.has_holds:
            raise ValueError("only hold-free laws (p_i + q_i = 1) can be tabulated")
        table = cls._tabulate(probs.p, probs.q)
        return cls(table / table.sum())

    @staticmethod
    def _tabulate(p, q):
        k = len(p)
        bits = ((np.arange(2**k)[:, None] >> np.arange(k)) & 1).astype(bool)
        return np.prod(np.where(bits, q, p), axis=1)

    @property
    def dim(self) -> int:
        return self._indicators.shape[1]

    @property
    def indicators(self) -> np.ndarray:
        """All move indicators, row ``idx`` matching ``probs[idx]``."""
        return self._indicators

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        idx = int(np.searchsorted(self._cdf, rng.random() * self._cdf[-1], side="right"))
        return self._indicators[min(idx, self.probs.size - 1)].copy()

    def prob(self, z: np.ndarray) -> float:
        if np.any(z == 0):
            return 0.0
        return float(self.probs[_subset_index(z)])

    def log_ratio(self, z: np.ndarray) -> float:
        if np.any(z == 0):
            raise ValueError("explicit move tables have no hold moves")
        num = self.probs[_subset_index(-z)]
        den = self.probs[_subset_index(z)]
        if num <= 0 or den <= 0:
            raise ValueError("move or its conjugate has probability 0; unbalanced move design")
        return math.log(num) - math.log(den)


MoveLaw = MoveProbabilities | MoveTable


def sample_move(probs: MoveLaw, rng: np.random.Generator) -> np.ndarray:
    """Draw a move indicator with at least one nonzero entry."""
    return probs.sample(rng)


def log_move_prob_ratio(z, probs: MoveLaw) -> float:
    """Log of P(conjugate(z)) / P(z); the rejection normalizer cancels."""
    z = np.asarray(z)
    if z.shape != (probs.dim,):
        raise ValueError(f"move indicator must have shape ({probs.dim},)")
    return probs.log_ratio(z)
