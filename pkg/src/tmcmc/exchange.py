"""Bridge-exchange sampling for the circular model ``f(y | nu) = exp(cos(y + nu sin y))``.

The normalizer ``Z(nu)`` is never evaluated on the sampling path.  Each
parameter update draws an exact auxiliary sample at the proposed value and
walks it through ``M`` bridge levels ``p_m ~ f(.|theta)^b_m f(.|theta')^(1-b_m)``,
``b_m = m / (M + 1)``, with singleton-eps additive kernels on the circle:
one scalar eps per level moves all ``n`` coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate
from scipy.special import i0e

from tmcmc.diagnostics import circular_histogram_density
from tmcmc.moves import MoveProbabilities
from tmcmc.samplers import ChainResult, Schedule, metropolis_accept
from tmcmc.targets import circular_log_Z, circular_loglik

TWO_PI = 2.0 * math.pi


def wrap(angle):
    """Map angles into (-pi, pi] (addition modulo 2*pi)."""
    a = np.asarray(angle, dtype=float)
    inside = (a > -math.pi) & (a <= math.pi)
    wrapped = math.pi - np.mod(math.pi - a, TWO_PI)
    wrapped = np.where(wrapped <= -math.pi, math.pi, wrapped)
    out = np.where(inside, a, wrapped)
    return float(out) if out.ndim == 0 else out


# -- exact and proposal samplers -------------------------------------------------


def exact_circular_sample(nu: float, n: int, rng: np.random.Generator, return_trials: bool = False):
    """``n`` i.i.d. draws from ``f(. | nu) / Z(nu)`` by rejection from the uniform.

    A uniform proposal ``y`` is kept with probability ``exp(cos(y + nu sin y) - 1)``,
    which is at most 1 and at least ``e**-2``.
    """
    out = np.empty(n)
    filled = trials = 0
    while filled < n:
        batch = max(2 * (n - filled), 8)
        y = wrap(rng.uniform(-math.pi, math.pi, batch))
        keep = np.log(rng.random(batch)) < np.cos(y + nu * np.sin(y)) - 1.0
        kept = y[keep][: n - filled]
        # count only the trials consumed up to the last kept draw
        if kept.size < n - filled:
            trials += batch
        else:
            trials += int(np.flatnonzero(keep)[n - filled - 1]) + 1
        out[filled : filled + kept.size] = kept
        filled += kept.size
    return (out, trials) if return_trials else out


def sample_von_mises(mu: float, kappa: float, rng: np.random.Generator) -> float:
    """One von Mises(mu, kappa) draw, Best-Fisher wrapped-Cauchy rejection."""
    if kappa < 1e-8:
        return wrap(mu + rng.uniform(-math.pi, math.pi))
    tau = 1.0 + math.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * kappa)
    r = (1.0 + rho * rho) / (2.0 * rho)
    while True:
        u1, u2, u3 = rng.random(3)
        z = math.cos(math.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        if c * (2.0 - c) - u2 > 0.0 or math.log(c / u2) + 1.0 - c >= 0.0:
            break
    angle = math.acos(max(-1.0, min(1.0, f)))
    return wrap(mu + angle if u3 > 0.5 else mu - angle)


def von_mises_logpdf(x: float, mu: float, kappa: float) -> float:
    return kappa * math.cos(x - mu) - math.log(TWO_PI * i0e(kappa)) - kappa


# -- bridge kernels --------------------------------------------------------------


@dataclass(frozen=True)
class BridgeConfig:
    """Bridge size, per-coordinate move law and scales, proposal concentration.

    ``eps_upper`` truncates the standard normal eps law to ``(0, eps_upper]``.
    """

    M: int
    n: int
    kappa: float = 0.5
    probs: Optional[MoveProbabilities] = None
    scales: Optional[np.ndarray] = None
    eps_upper: float = math.pi

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("bridge size M must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.kappa >= 0:
            raise ValueError("kappa must be nonnegative")
        probs = MoveProbabilities.symmetric(self.n) if self.probs is None else self.probs
        if probs.dim != self.n:
            raise ValueError("move law dimension must equal n")
        scales = np.ones(self.n) if self.scales is None else np.asarray(self.scales, dtype=float)
        if scales.shape != (self.n,) or np.any(scales <= 0):
            raise ValueError("scales must be n positive numbers")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "scales", scales)

    def beta(self, m: int) -> float:
        return m / (self.M + 1)


def bridge_weight(m: int, x, theta: float, theta_prime: float, M: int) -> float:
    """Log of ``f_m(x) = f(x|theta)^b_m f(x|theta')^(1-b_m)`` with ``b_m = m/(M+1)``."""
    if not 0 <= m <= M + 1:
        raise ValueError(f"level m={m} outside 0..{M + 1}")
    if m == M + 1:
        return circular_loglik(x, theta)
    if m == 0:
        return circular_loglik(x, theta_prime)
    b = m / (M + 1)
    return b * circular_loglik(x, theta) + (1.0 - b) * circular_loglik(x, theta_prime)


def draw_bridge_eps(cfg: BridgeConfig, rng: np.random.Generator) -> float:
    while True:
        eps = abs(rng.standard_normal())
        if 0.0 < eps <= cfg.eps_upper:
            return eps


def bridge_log_alpha(m, x, x_new, z, theta, theta_prime, cfg: BridgeConfig) -> float:
    """Log acceptance ratio of one level-``m`` bridge move ``x -> x_new``."""
    return (
        cfg.probs.log_ratio(z)
        + bridge_weight(m, x_new, theta, theta_prime, cfg.M)
        - bridge_weight(m, x, theta, theta_prime, cfg.M)
    )


def bridge_kernel_step(m, x, theta, theta_prime, cfg: BridgeConfig, rng, eps=None, z=None):
    """One singleton-eps move leaving ``p_m`` invariant.

    ``eps`` and ``z`` may be injected; otherwise they are drawn.  Returns
    the next state and whether the proposal was accepted.
    """
    eps = draw_bridge_eps(cfg, rng) if eps is None else eps
    z = cfg.probs.sample(rng) if z is None else np.asarray(z)
    x_new = wrap(x + z * cfg.scales * eps)
    if metropolis_accept(bridge_log_alpha(m, x, x_new, z, theta, theta_prime, cfg), rng):
        return x_new, True
    return np.asarray(x, dtype=float), False


def bridge_kernel_matrix(m, theta, theta_prime, cfg: BridgeConfig, grid_size: int, eps_steps, eps_probs):
    """Exact kernel of the level-``m`` move for ``n = 1`` on a uniform angle grid.

    The eps law is discrete: ``eps = eps_steps[j] * 2*pi/grid_size`` with
    probability ``eps_probs[j]``, so states stay on the grid.

    Returns:
        ``(grid, K)`` with ``K[i, j]`` the probability of moving from
        ``grid[i]`` to ``grid[j]``.
    """
    if cfg.n != 1:
        raise ValueError("exact bridge kernels are built for n = 1")
    h = TWO_PI / grid_size
    grid = wrap(-math.pi + h * (np.arange(grid_size) + 1))
    K = np.zeros((grid_size, grid_size))
    move_p = {1: cfg.probs.p[0], -1: cfg.probs.q[0]}
    for i in range(grid_size):
        x = grid[i : i + 1]
        for steps, w in zip(eps_steps, eps_probs):
            eps = steps * h
            for sign in (1, -1):
                pz = move_p[sign]
                if pz == 0:
                    continue
                z = np.array([sign])
                x_new = wrap(x + sign * cfg.scales * eps)
                j = int(round((x_new[0] + math.pi) / h)) - 1
                j %= grid_size
                log_a = bridge_log_alpha(m, x, grid[j : j + 1], z, theta, theta_prime, cfg)
                a = 1.0 if log_a >= 0 else math.exp(log_a)
                K[i, j] += w * pz * a
                K[i, i] += w * pz * (1.0 - a)
    return grid, K


# -- exchange step and chain ---------------------------------------------------------


class ExchangeStep(NamedTuple):
    theta: float
    accepted: bool
    eps_draws: int
    exact_trials: int
    log_alpha: float


def _uniform_log_prior(theta: float) -> float:
    return 0.0 if -math.pi < theta <= math.pi else -math.inf


def bridge_exchange_step(
    theta: float,
    y,
    cfg: BridgeConfig,
    rng: np.random.Generator,
    log_prior=_uniform_log_prior,
    theta_prime: Optional[float] = None,
) -> ExchangeStep:
    """One bridge-exchange update of the circular parameter.

    ``theta_prime`` may be forced; otherwise it is drawn from von Mises
    ``(theta, cfg.kappa)``.  ``eps_draws`` counts the state-space draws made
    by the bridge kernels (one per level).
    """
    M = cfg.M
    if theta_prime is None:
        theta_prime = sample_von_mises(theta, cfg.kappa, rng)
    x, trials = exact_circular_sample(theta_prime, cfg.n, rng, return_trials=True)

    lt = circular_loglik(x, theta)
    ltp = circular_loglik(x, theta_prime)
    # step-4 product, log domain: sum_m [log f_{m+1}(x_m) - log f_m(x_m)]
    log_prod = (lt - ltp) / (M + 1)
    eps_draws = 0
    fair = bool(np.all(cfg.probs.p == 0.5) and np.all(cfg.probs.q == 0.5))
    uniforms = rng.random(M)
    for m in range(1, M + 1):
        b = m / (M + 1)
        eps = draw_bridge_eps(cfg, rng)
        eps_draws += 1
        if fair:
            z = np.where(rng.random(cfg.n) < 0.5, 1, -1)
            log_move = 0.0
        else:
            z = cfg.probs.sample(rng)
            log_move = cfg.probs.log_ratio(z)
        x_new = wrap(x + z * cfg.scales * eps)
        lt_new = circular_loglik(x_new, theta)
        ltp_new = circular_loglik(x_new, theta_prime)
        log_a = log_move + b * (lt_new - lt) + (1.0 - b) * (ltp_new - ltp)
        if log_a >= 0 or math.log(uniforms[m - 1]) < log_a:
            x, lt, ltp = x_new, lt_new, ltp_new
        log_prod += (lt - ltp) / (M + 1)

    log_alpha = (
        von_mises_logpdf(theta, theta_prime, cfg.kappa)
        - von_mises_logpdf(theta_prime, theta, cfg.kappa)
        + log_prior(theta_prime)
        - log_prior(theta)
        + circular_loglik(y, theta_prime)
        - circular_loglik(y, theta)
        + log_prod
    )
    accepted = metropolis_accept(log_alpha, rng)
    return ExchangeStep(theta_prime if accepted else theta, accepted, eps_draws, trials, log_alpha)


@dataclass
class ExchangeResult:
    chain: ChainResult
    eps_draws: np.ndarray = field(repr=False)

    @property
    def thetas(self) -> np.ndarray:
        return self.chain.draws[:, 0]


def run_exchange(y, cfg: BridgeConfig, schedule: Schedule, theta0: float = 0.0, log_prior=_uniform_log_prior):
    """Bridge-exchange chain for the circular parameter.

    Returns an `ExchangeResult` whose ``eps_draws`` records the per-iteration
    bridge eps count of every iteration.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (cfg.n,):
        raise ValueError(f"data must have shape ({cfg.n},)")
    rng = np.random.default_rng(schedule.seed)
    theta = wrap(theta0)
    draws = np.empty((schedule.n_kept, 1))
    eps_draws = np.empty(schedule.n, dtype=np.int64)
    accepts = kept = 0
    for it in range(schedule.n):
        step = bridge_exchange_step(theta, y, cfg, rng, log_prior)
        theta = step.theta
        eps_draws[it] = step.eps_draws
        post = it - schedule.burn_in
        if post >= 0:
            accepts += step.accepted
            if (post + 1) % schedule.thin == 0:
                draws[kept, 0] = theta
                kept += 1
    chain = ChainResult(draws, accepts, schedule.n, schedule, np.array([accepts]))
    return ExchangeResult(chain, eps_draws)


# -- exact posterior oracle ----------------------------------------------------------


def exact_log_posterior_unnorm(nu: float, y) -> float:
    """``sum_i cos(y_i + nu sin y_i) - n log Z(nu)`` under a uniform prior."""
    y = np.asarray(y, dtype=float)
    return circular_loglik(y, nu) - y.size * circular_log_Z(nu)


class ExactCircularPosterior:
    """Quadrature-normalized posterior density of ``nu`` on (-pi, pi]."""

    def __init__(self, y):
        self.y = np.asarray(y, dtype=float)
        self._shift = exact_log_posterior_unnorm(0.0, self.y)
        norm, _ = integrate.quad(self._unnorm, -math.pi, math.pi, epsabs=1e-12, limit=200)
        self._log_norm = math.log(norm)

    def _unnorm(self, nu):
        return math.exp(exact_log_posterior_unnorm(nu, self.y) - self._shift)

    def pdf(self, nu):
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        vals = [exact_log_posterior_unnorm(v, self.y) - self._shift - self._log_norm for v in nu]
        return np.exp(vals)


def histogram_l1_distance(angles, posterior: ExactCircularPosterior, n_bins: int = 50, sub: int = 20) -> float:
    """``int |histogram density - exact density|`` over (-pi, pi].

    Each bin is integrated on ``sub`` midpoints.
    """
    centers, density = circular_histogram_density(angles, n_bins)
    width = TWO_PI / n_bins
    offsets = (np.arange(sub) + 0.5) / sub * width - width / 2
    nodes = (centers[:, None] + offsets[None, :]).ravel()
    exact = posterior.pdf(nodes).reshape(n_bins, sub)
    return float(np.sum(np.abs(exact - density[:, None])) * width / sub)
