"""One-step kernels and the chain driver.

Kernels are immutable objects with a ``transition(x, logp, target, rng)``
method returning ``(x_next, logp_next, accepted)``; the current log density
is threaded through so that each iteration evaluates the target once per
proposal.  The module-level ``*_step`` functions are stateless conveniences
that evaluate the current point themselves.

All acceptance tests are done in log space: a proposal is accepted when
``log(u) < log_alpha`` for ``u ~ U(0, 1)``.  A log density of ``-inf`` is a
certain rejection; NaN is an error.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from tmcmc.errors import ChainError, NonFiniteError
from tmcmc.moves import MoveLaw
from tmcmc.transforms import EpsDomain, TransformFamily

logger = logging.getLogger(__name__)

EpsSampler = Callable[[np.random.Generator], float]


@dataclass(frozen=True)
class Target:
    """Unnormalized log density with an optional gradient."""

    log_density: Callable[[np.ndarray], float]
    grad_log_density: Optional[Callable[[np.ndarray], np.ndarray]] = None


def as_target(target) -> Target:
    if isinstance(target, Target):
        return target
    if hasattr(target, "log_density"):
        return Target(target.log_density, getattr(target, "grad_log_density", None))
    if callable(target):
        return Target(target)
    raise TypeError(f"cannot use {type(target).__name__} as a target")


def evaluate(target: Target, x: np.ndarray) -> float:
    value = float(target.log_density(x))
    if math.isnan(value) or value == math.inf:
        raise NonFiniteError(f"target log density is {value} at {x!r}")
    return value


# -- eps laws ---------------------------------------------------------------


def truncated_normal(domain: EpsDomain, scale: float = 1.0) -> EpsSampler:
    """N(0, scale**2) restricted to ``domain``, by rejection.

    For ``(0, inf)`` this is the half-normal law and needs no rejection.
    """
    if domain.low == 0.0 and domain.high == math.inf:
        return lambda rng: abs(scale * rng.standard_normal())
    positive_only = domain.low >= 0.0

    def sample(rng: np.random.Generator) -> float:
        while True:
            eps = scale * rng.standard_normal()
            if positive_only:
                eps = abs(eps)
            if eps in domain:
                return eps

    return sample


def half_normal(rng: np.random.Generator) -> float:
    return abs(rng.standard_normal())


def uniform_eps(low: float, high: float) -> EpsSampler:
    return lambda rng: rng.uniform(low, high)


def exponential_eps(rate: float = 1.0, upper: float = math.inf) -> EpsSampler:
    """Exponential law, restricted to ``(0, upper)`` by rejection."""

    def sample(rng):
        while True:
            eps = rng.exponential(1.0 / rate)
            if 0.0 < eps < upper:
                return eps

    return sample


# -- acceptance bookkeeping ---------------------------------------------------


class LogAcceptance(NamedTuple):
    """Additive pieces of a log acceptance ratio."""

    log_target_ratio: float
    log_move_ratio: float = 0.0
    log_jacobian: float = 0.0
    log_aux_ratio: float = 0.0

    @property
    def total(self) -> float:
        return self.log_target_ratio + self.log_move_ratio + self.log_jacobian + self.log_aux_ratio

    @property
    def alpha(self) -> float:
        total = self.total
        return 1.0 if total >= 0 else math.exp(total)


def metropolis_accept(log_alpha: float, rng: np.random.Generator) -> bool:
    if log_alpha >= 0.0:
        return True
    if log_alpha == -math.inf:
        return False
    return math.log(rng.random()) < log_alpha


def _target_ratio(logp_new: float, logp_old: float) -> float:
    if logp_new == -math.inf:
        return -math.inf
    return logp_new - logp_old


# -- TMCMC --------------------------------------------------------------------


@dataclass(frozen=True)
class KernelConfig:
    """Transformation family, move law and eps law of a TMCMC kernel.

    ``eps_sampler`` defaults to the standard normal truncated to the family's
    eps-domain.  Its density never enters the acceptance ratio.
    """

    family: TransformFamily
    probs: MoveLaw
    eps_sampler: Optional[EpsSampler] = None

    def __post_init__(self):
        if self.probs.dim != self.family.dim:
            raise ValueError("move law and family dimensions differ")
        if self.eps_sampler is None:
            object.__setattr__(self, "eps_sampler", truncated_normal(self.family.domain))


@dataclass(frozen=True)
class TMCMCKernel:
    """Singleton-eps transformation kernel."""

    config: KernelConfig

    @property
    def n_blocks(self) -> int:
        return 1

    def log_acceptance(
        self, x: np.ndarray, logp: float, eps: float, z: np.ndarray, target: Target
    ) -> tuple[np.ndarray, float, LogAcceptance]:
        """Proposal and acceptance pieces for a given ``(eps, z)``."""
        cfg = self.config
        x_new, log_jac = cfg.family.move(x, eps, z)
        logp_new = evaluate(target, x_new)
        pieces = LogAcceptance(
            _target_ratio(logp_new, logp), cfg.probs.log_ratio(z), log_jac
        )
        return x_new, logp_new, pieces

    def draw(self, rng: np.random.Generator) -> tuple[float, np.ndarray]:
        eps = self.config.eps_sampler(rng)
        z = self.config.probs.sample(rng)
        return eps, z

    def transition(self, x, logp, target, rng):
        eps, z = self.draw(rng)
        x_new, logp_new, pieces = self.log_acceptance(x, logp, eps, z, target)
        if metropolis_accept(pieces.total, rng):
            return x_new, logp_new, True
        return x, logp, False


# -- random-walk and Gaussian MH ----------------------------------------------


@dataclass(frozen=True)
class RWMHKernel:
    """Joint random walk: every coordinate gets its own N(0, a_i**2) step."""

    scales: np.ndarray

    def __post_init__(self):
        scales = np.atleast_1d(np.asarray(self.scales, dtype=float))
        if np.any(scales < 0):
            raise ValueError("scales must be nonnegative")
        object.__setattr__(self, "scales", scales)

    @property
    def n_blocks(self) -> int:
        return 1

    def transition(self, x, logp, target, rng):
        x_new = x + self.scales * rng.standard_normal(x.size)
        logp_new = evaluate(target, x_new)
        if metropolis_accept(_target_ratio(logp_new, logp), rng):
            return x_new, logp_new, True
        return x, logp, False


@dataclass(frozen=True)
class SequentialRWMHKernel:
    """Coordinate-at-a-time random walk; one MH test per coordinate."""

    scales: np.ndarray

    def __post_init__(self):
        scales = np.atleast_1d(np.asarray(self.scales, dtype=float))
        if np.any(scales < 0):
            raise ValueError("scales must be nonnegative")
        object.__setattr__(self, "scales", scales)

    @property
    def n_blocks(self) -> int:
        return self.scales.size

    def transition(self, x, logp, target, rng):
        accepted = np.zeros(x.size, dtype=bool)
        steps = self.scales * rng.standard_normal(x.size)
        for i in range(x.size):
            x_new = x.copy()
            x_new[i] += steps[i]
            logp_new = evaluate(target, x_new)
            if metropolis_accept(_target_ratio(logp_new, logp), rng):
                x, logp = x_new, logp_new
                accepted[i] = True
        return x, logp, accepted


@dataclass(frozen=True)
class GaussianMHKernel:
    """Random walk with multivariate normal N(x, cov) proposals."""

    cov: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if not np.allclose(cov, cov.T):
            raise ValueError("proposal covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("proposal covariance is not positive definite") from exc
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)

    @property
    def n_blocks(self) -> int:
        return 1

    def transition(self, x, logp, target, rng):
        x_new = x + self.chol @ rng.standard_normal(x.size)
        logp_new = evaluate(target, x_new)
        if metropolis_accept(_target_ratio(logp_new, logp), rng):
            return x_new, logp_new, True
        return x, logp, False


# -- HMC -------------------------------------------------------------------------


@dataclass(frozen=True)
class HmcConfig:
    """Diagonal mass, leap-frog step size and number of leap-frog steps."""

    mass: np.ndarray
    step: float
    leap_steps: int

    def __post_init__(self):
        mass = np.atleast_1d(np.asarray(self.mass, dtype=float))
        if np.any(mass <= 0):
            raise ValueError("masses must be positive")
        if not self.step > 0:
            raise ValueError("step size must be positive")
        if int(self.leap_steps) != self.leap_steps or self.leap_steps < 1:
            raise ValueError("leap_steps must be an integer >= 1")
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "leap_steps", int(self.leap_steps))

    def kinetic(self, p: np.ndarray) -> float:
        return 0.5 * float(np.sum(p * p / self.mass))


def _finite_grad(grad_U, x):
    g = np.asarray(grad_U(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError(f"non-finite gradient at {x!r}")
    return g


def leapfrog(x, p, grad_U, cfg: HmcConfig, grad_x=None):
    """Run ``cfg.leap_steps`` leap-frog steps of size ``cfg.step``.

    ``grad_U`` is the gradient of the potential (minus the log density).
    Returns the final position and momentum.
    """
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)
    dt = cfg.step
    g = _finite_grad(grad_U, x) if grad_x is None else grad_x
    for _ in range(cfg.leap_steps):
        x = x + dt * (p - 0.5 * dt * g) / cfg.mass
        g_new = _finite_grad(grad_U, x)
        p = p - 0.5 * dt * (g + g_new)
        g = g_new
    return x, p


@dataclass(frozen=True)
class HMCKernel:
    """Hybrid Monte Carlo: fresh N(0, M) momentum, leap-frog, energy test.

    The leap-frog map is the single (forward) move type, taken with
    probability one, and preserves volume: no move-probability or Jacobian
    factor enters the acceptance ratio.
    """

    config: HmcConfig

    @property
    def n_blocks(self) -> int:
        return 1

    def log_acceptance(self, x, logp, momentum, target):
        cfg = self.config
        grad = target.grad_log_density
        if grad is None:
            raise TypeError("HMC needs a target with grad_log_density")
        x_new, p_new = leapfrog(x, momentum, lambda y: -np.asarray(grad(y)), cfg)
        logp_new = evaluate(target, x_new)
        pieces = LogAcceptance(
            _target_ratio(logp_new, logp),
            log_aux_ratio=cfg.kinetic(momentum) - cfg.kinetic(p_new),
        )
        return x_new, logp_new, pieces

    def transition(self, x, logp, target, rng):
        momentum = np.sqrt(self.config.mass) * rng.standard_normal(x.size)
        x_new, logp_new, pieces = self.log_acceptance(x, logp, momentum, target)
        if metropolis_accept(pieces.total, rng):
            return x_new, logp_new, True
        return x, logp, False


# -- stateless single steps --------------------------------------------------


def _single_step(kernel, x, target, rng):
    target = as_target(target)
    x = np.asarray(x, dtype=float)
    logp = evaluate(target, x)
    if logp == -math.inf:
        raise ValueError("current state has zero target density")
    x_next, _, accepted = kernel.transition(x, logp, target, rng)
    return x_next, accepted


def tmcmc_step(x, target, cfg: KernelConfig, rng):
    return _single_step(TMCMCKernel(cfg), x, target, rng)


def rwmh_step(x, target, scales, rng):
    return _single_step(RWMHKernel(scales), x, target, rng)


def sequential_rwmh_step(x, target, scales, rng):
    return _single_step(SequentialRWMHKernel(scales), x, target, rng)


def mh_gaussian_step(x, target, cov, rng):
    return _single_step(GaussianMHKernel(cov), x, target, rng)


def hmc_step(x, target, cfg: HmcConfig, rng):
    return _single_step(HMCKernel(cfg), x, target, rng)


# -- chain driver -------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """Run length ``n``, burn-in, thinning and seed."""

    n: int
    burn_in: int = 0
    thin: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 <= self.burn_in < self.n:
            raise ValueError("need 0 <= burn_in < n")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    @property
    def n_kept(self) -> int:
        return (self.n - self.burn_in) // self.thin


@dataclass
class ChainResult:
    """Stored draws and post-burn-in acceptance counts.

    ``proposal_count`` is the total number of iterations ``n``;
    acceptances are only counted after burn-in (thinned-away iterations
    included).  ``block_accepts`` splits ``accept_count`` across the blocks
    of a blockwise kernel (one entry for joint kernels).
    """

    draws: np.ndarray
    accept_count: int
    proposal_count: int
    schedule: Schedule
    block_accepts: np.ndarray

    @property
    def post_burn_in(self) -> int:
        return self.proposal_count - self.schedule.burn_in

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / (self.post_burn_in * self.block_accepts.size)

    @property
    def block_acceptance_rates(self) -> np.ndarray:
        return self.block_accepts / self.post_burn_in


Kernel = Union[TMCMCKernel, RWMHKernel, SequentialRWMHKernel, GaussianMHKernel, HMCKernel]


def run_chain(kernel, target, init, schedule: Schedule, rng=None) -> ChainResult:
    """Run ``schedule.n`` transitions of ``kernel`` from ``init``.

    The generator is ``numpy.random.default_rng(schedule.seed)`` unless one
    is passed explicitly.  Every ``thin``-th post-burn-in state is stored.

    Raises:
        ChainError: wrapping any kernel failure, with the iteration index.
    """
    target = as_target(target)
    rng = np.random.default_rng(schedule.seed) if rng is None else rng
    x = np.array(init, dtype=float)
    logp = evaluate(target, x)
    if logp == -math.inf:
        raise ValueError("initial state has zero target density")
    n_blocks = getattr(kernel, "n_blocks", 1)
    draws = np.empty((schedule.n_kept, x.size))
    block_accepts = np.zeros(n_blocks, dtype=np.int64)
    kept = 0
    for it in range(schedule.n):
        try:
            x, logp, accepted = kernel.transition(x, logp, target, rng)
        except Exception as exc:
            raise ChainError(it, exc) from exc
        post = it - schedule.burn_in
        if post >= 0:
            block_accepts += np.asarray(accepted, dtype=np.int64)
            if (post + 1) % schedule.thin == 0:
                draws[kept] = x
                kept += 1
    logger.debug("chain done: %d kept, %s accepted", kept, block_accepts)
    return ChainResult(
        draws=draws,
        accept_count=int(block_accepts.sum()),
        proposal_count=schedule.n,
        schedule=schedule,
        block_accepts=block_accepts,
    )
