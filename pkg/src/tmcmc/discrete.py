"""TMCMC on discrete state spaces, with exact finite-kernel oracles.

Two chains:

* `SignChain` on ``{-1, +1}^k``.  The forward map is ``sgn(x + eps)`` and the
  backward map ``sgn(x - eps)`` with ``eps > 1``, so a forward move sets the
  coordinate to +1 and a backward move to -1 whatever ``eps`` is.
* `LatticeChain` on ``Z^k``.  With probability ``r`` one uniformly chosen
  coordinate moves by ``+-floor(eps)``; otherwise all coordinates move
  jointly, ``v + z * floor(eps)``, with a single ``eps >= 1``.

Neither map has a Jacobian.  `build_exact_kernel` enumerates every
``(eps, z, accept)`` outcome of a chain over a finite state list, which lets
stationarity and reachability be checked exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from tmcmc.moves import MoveLaw, MoveProbabilities, MoveTable
from tmcmc.samplers import metropolis_accept

MAX_EXACT_STATES = 10_000

LogWeight = Callable[[tuple], float]


@dataclass(frozen=True)
class DiscreteEps:
    """Finitely supported eps law."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if len(values) != len(probs) or not values:
            raise ValueError("values and probs must be non-empty and the same length")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError("eps probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform_grid(cls, low: float, high: float, size: int) -> DiscreteEps:
        """Uniform law on ``size`` midpoints of ``[low, high)``."""
        h = (high - low) / size
        return cls(tuple(low + h * (i + 0.5) for i in range(size)), (1.0 / size,) * size)

    def sample(self, rng: np.random.Generator) -> float:
        return self.values[int(rng.choice(len(self.values), p=self.probs))]


def shifted_exponential_eps(rng: np.random.Generator) -> float:
    """``1 + Exp(1)``, a default eps law on ``[1, inf)``."""
    return 1.0 + rng.exponential()


# -- move laws, enumerated ---------------------------------------------------------


def move_prob(law: MoveLaw, z) -> float:
    """Probability of ``z`` under ``law`` (the all-hold draw is excluded)."""
    z = np.asarray(z)
    if isinstance(law, MoveTable):
        return law.prob(z)
    if not z.any():
        return 0.0
    all_hold = float(np.prod(1.0 - law.p - law.q))
    return law.prob_unnormalized(z) / (1.0 - all_hold)


def enumerate_moves(law: MoveLaw) -> Iterator[tuple[np.ndarray, float]]:
    """Every move indicator with positive probability, and that probability."""
    if isinstance(law, MoveTable):
        for z, prob in zip(law.indicators, law.probs):
            if prob > 0:
                yield z.copy(), float(prob)
        return
    for combo in itertools.product((1, -1, 0), repeat=law.dim):
        z = np.array(combo, dtype=np.int8)
        prob = move_prob(law, z)
        if prob > 0:
            yield z, prob


def _log(prob: float) -> float:
    return math.log(prob) if prob > 0 else -math.inf


# -- sign chain ----------------------------------------------------------------------


def sign_map(s, z) -> tuple:
    """``sgn(s + z * eps)`` for any ``eps > 1``: forward gives +1, backward -1."""
    return tuple(int(si) if zi == 0 else int(zi) for si, zi in zip(s, z))


def sign_reverse_move(s, s_new, z) -> np.ndarray:
    """Move indicator taking ``s_new`` back to ``s``.

    Coordinates that changed need the opposite direction; coordinates that
    did not change keep theirs (it maps the value onto itself).
    """
    z = np.asarray(z)
    changed = np.asarray(s) != np.asarray(s_new)
    return np.where(changed, -z, z)


@dataclass(frozen=True)
class SignChain:
    log_weight: LogWeight
    probs: MoveLaw

    @property
    def dim(self) -> int:
        return self.probs.dim

    def log_alpha(self, s, z) -> tuple[tuple, float]:
        s = tuple(int(v) for v in s)
        s_new = sign_map(s, z)
        back = sign_reverse_move(s, s_new, z)
        log_a = (
            self.log_weight(s_new)
            - self.log_weight(s)
            + _log(move_prob(self.probs, back))
            - _log(move_prob(self.probs, z))
        )
        return s_new, log_a

    def step(self, s, rng: np.random.Generator, eps_sampler=shifted_exponential_eps):
        eps = eps_sampler(rng)
        if not eps > 1.0:
            raise ValueError("sign-chain eps must exceed 1")
        z = self.probs.sample(rng)
        s_new, log_a = self.log_alpha(s, z)
        if metropolis_accept(log_a, rng):
            return s_new, True
        return tuple(int(v) for v in s), False

    def outcomes(self, s, eps_law: Optional[DiscreteEps] = None):
        """``(probability, proposal, log_alpha)`` for every move; eps is irrelevant."""
        for z, prob in enumerate_moves(self.probs):
            s_new, log_a = self.log_alpha(s, z)
            yield prob, s_new, log_a


def sign_tmcmc_step(s, target: LogWeight, probs: MoveLaw, rng: np.random.Generator):
    """One sign-chain update; returns ``(s_next, accepted)``."""
    return SignChain(target, probs).step(s, rng)


def ising_log_weight(J: float) -> LogWeight:
    """``J * sum_i s_i s_{i+1}`` along a line of spins."""

    def log_weight(s) -> float:
        s = np.asarray(s, dtype=float)
        return float(J * np.dot(s[:-1], s[1:]))

    return log_weight


# -- lattice chain ---------------------------------------------------------------


@dataclass(frozen=True)
class LatticeChain:
    """Mixture of single-site and joint additive moves on ``Z^k``.

    ``r`` is the probability of the single-site branch.  ``r = 0`` keeps only
    the joint move and ``r = 1`` only the single-site walk.
    """

    log_weight: LogWeight
    probs: MoveLaw
    r: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("r must lie in [0, 1]")

    @property
    def dim(self) -> int:
        return self.probs.dim

    def _joint(self, v, eps, z):
        v_new = tuple(int(a) + int(b) * math.floor(eps) for a, b in zip(v, z))
        log_a = self.log_weight(v_new) - self.log_weight(v)
        if log_a != -math.inf:
            log_a += self.probs.log_ratio(np.asarray(z))
        return v_new, log_a

    def _single(self, v, eps, j, sign):
        v_new = list(v)
        v_new[j] += sign * math.floor(eps)
        v_new = tuple(v_new)
        return v_new, self.log_weight(v_new) - self.log_weight(v)

    def step(self, v, rng: np.random.Generator, eps_sampler=shifted_exponential_eps):
        v = tuple(int(a) for a in v)
        eps = eps_sampler(rng)
        if not eps >= 1.0:
            raise ValueError("lattice-chain eps must be at least 1")
        if rng.random() < self.r:
            j = int(rng.integers(self.dim))
            sign = 1 if rng.random() < 0.5 else -1
            v_new, log_a = self._single(v, eps, j, sign)
        else:
            v_new, log_a = self._joint(v, eps, self.probs.sample(rng))
        if metropolis_accept(log_a, rng):
            return v_new, True
        return v, False

    def outcomes(self, v, eps_law: DiscreteEps):
        v = tuple(int(a) for a in v)
        for eps, pe in zip(eps_law.values, eps_law.probs):
            if self.r > 0:
                w = pe * self.r / (2 * self.dim)
                for j in range(self.dim):
                    for sign in (1, -1):
                        v_new, log_a = self._single(v, eps, j, sign)
                        yield w, v_new, log_a
            if self.r < 1:
                for z, pz in enumerate_moves(self.probs):
                    v_new, log_a = self._joint(v, eps, z)
                    yield pe * (1 - self.r) * pz, v_new, log_a


def lattice_tmcmc_step(v, target: LogWeight, r: float, probs: MoveLaw, rng: np.random.Generator):
    """One lattice-chain update; returns ``(v_next, accepted)``."""
    return LatticeChain(target, probs, r).step(v, rng)


def box_states(low: int, high: int, k: int) -> list[tuple]:
    """All integer points of ``[low, high]^k`` in lexicographic order."""
    return list(itertools.product(range(low, high + 1), repeat=k))


def truncate_to_box(log_weight: LogWeight, low: int, high: int) -> LogWeight:
    """``log_weight`` inside ``[low, high]^k``, ``-inf`` outside."""

    def truncated(v) -> float:
        if all(low <= a <= high for a in v):
            return log_weight(v)
        return -math.inf

    return truncated


def geometric_log_weight(theta: float) -> LogWeight:
    """``log theta^(|v_1| + ... + |v_k|)``."""
    log_theta = math.log(theta)

    def log_weight(v) -> float:
        return log_theta * sum(abs(a) for a in v)

    return log_weight


# -- exact kernels -------------------------------------------------------------------


def build_exact_kernel(chain, states: Sequence[tuple], eps_law: Optional[DiscreteEps] = None) -> np.ndarray:
    """Transition matrix ``K[i, j] = P(states[i] -> states[j])``.

    Proposals leaving ``states`` must have zero target weight (they are
    always rejected); anything else is an error.
    """
    n = len(states)
    if n > MAX_EXACT_STATES:
        raise ValueError(f"state space has {n} states; exact kernels support <= {MAX_EXACT_STATES}")
    index = {tuple(s): i for i, s in enumerate(states)}
    K = np.zeros((n, n))
    for i, s in enumerate(states):
        for prob, s_new, log_a in chain.outcomes(s, eps_law):
            a = 1.0 if log_a >= 0 else math.exp(log_a)
            if a > 0:
                j = index.get(tuple(s_new))
                if j is None:
                    raise ValueError(f"proposal {s_new} with positive acceptance leaves the state list")
                K[i, j] += prob * a
            K[i, i] += prob * (1.0 - a)
    return K


def stationary_weights(log_weight: LogWeight, states: Sequence[tuple]) -> np.ndarray:
    """Normalized target probabilities over ``states``."""
    logs = np.array([log_weight(tuple(s)) for s in states])
    w = np.exp(logs - logs.max())
    return w / w.sum()


def stationarity_error(pi: np.ndarray, K: np.ndarray) -> float:
    """``max |pi K - pi|``."""
    return float(np.max(np.abs(pi @ K - pi)))


def detailed_balance_error(pi: np.ndarray, K: np.ndarray) -> float:
    """``max |pi_i K_ij - pi_j K_ji|``."""
    flow = pi[:, None] * K
    return float(np.max(np.abs(flow - flow.T)))


def reachable_set(K: np.ndarray, start: int) -> set[int]:
    """Indices reachable from ``start`` in any number of steps."""
    seen = {start}
    frontier = [start]
    while frontier:
        i = frontier.pop()
        for j in np.flatnonzero(K[i] > 0):
            if j not in seen:
                seen.add(int(j))
                frontier.append(int(j))
    return seen


def two_step_row(K: np.ndarray, start: int) -> np.ndarray:
    """Row ``start`` of ``K @ K``."""
    return K[start] @ K


def parity_obstruction(states: Sequence[tuple], K: np.ndarray, start: tuple) -> bool:
    """True when no state with an even coordinate sum is reachable from an odd-sum ``start``
    (or vice versa), i.e. the chain is stuck on one parity class."""
    index = {tuple(s): i for i, s in enumerate(states)}
    start_parity = sum(start) % 2
    reach = reachable_set(K, index[tuple(start)])
    return all(sum(states[j]) % 2 == start_parity for j in reach)
