"""Log densities for the benchmark models and a synthetic geostatistics generator.

Models:

* Challenger O-ring logit regression with a flat prior.
* Poisson counts with a latent exponential-covariance Gaussian process
  (flat priors on ``beta``, ``log sigma2``, ``log alpha``).
* The circular family ``f(y | nu) = exp(cos(y + nu sin y))`` whose
  normalizer is only available by quadrature.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, linalg

# -- Challenger -----------------------------------------------------------------

# (flight number, O-ring failure, launch temperature in deg F)
CHALLENGER_RECORDS = (
    (14, 1, 53), (9, 1, 57), (23, 1, 58), (10, 1, 63), (1, 0, 66), (5, 0, 67),
    (13, 0, 67), (15, 0, 67), (4, 0, 68), (3, 0, 69), (8, 0, 70), (17, 0, 70),
    (2, 1, 70), (11, 1, 70), (6, 0, 72), (7, 0, 73), (16, 0, 75), (21, 1, 75),
    (19, 0, 76), (22, 0, 76), (12, 0, 78), (20, 0, 79), (18, 0, 81),
)  # fmt: skip

# Additive scales of the published Challenger TMCMC transformation.
CHALLENGER_SCALES = (7.3773, 4.3227)


@dataclass(frozen=True)
class ChallengerData:
    flight: np.ndarray
    failure: np.ndarray
    temp: np.ndarray

    @property
    def x(self) -> np.ndarray:
        """Temperatures scaled by their maximum."""
        return self.temp / self.temp.max()

    @property
    def n(self) -> int:
        return self.failure.size


def challenger_data() -> ChallengerData:
    rec = np.array(CHALLENGER_RECORDS, dtype=float)
    return ChallengerData(rec[:, 0].astype(int), rec[:, 1], rec[:, 2])


class ChallengerPosterior:
    """Logit model ``eta_i = beta1 + beta2 * x_i`` with a flat prior."""

    def __init__(self, data: ChallengerData | None = None):
        self.data = challenger_data() if data is None else data
        self._x = self.data.x
        self._y = self.data.failure

    def log_density(self, beta) -> float:
        eta = beta[0] + beta[1] * self._x
        # log(1 + e^eta) without overflow
        return float(np.dot(self._y, eta) - np.sum(np.logaddexp(0.0, eta)))

    def grad_log_density(self, beta) -> np.ndarray:
        eta = beta[0] + beta[1] * self._x
        resid = self._y - 0.5 * (1.0 + np.tanh(0.5 * eta))
        return np.array([resid.sum(), np.dot(resid, self._x)])

    def neg_hessian(self, beta) -> np.ndarray:
        eta = beta[0] + beta[1] * self._x
        w = 0.5 * (1.0 + np.tanh(0.5 * eta))
        w = w * (1.0 - w)
        design = np.column_stack([np.ones_like(self._x), self._x])
        return design.T @ (w[:, None] * design)


def challenger_log_posterior(beta) -> float:
    return ChallengerPosterior().log_density(np.asarray(beta, dtype=float))


def challenger_mle(tol: float = 1e-12, max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Newton-Raphson MLE and its inverse observed information."""
    model = ChallengerPosterior()
    beta = np.zeros(2)
    for _ in range(max_iter):
        step = np.linalg.solve(model.neg_hessian(beta), model.grad_log_density(beta))
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    else:
        raise RuntimeError("Newton iterations did not converge")
    return beta, np.linalg.inv(model.neg_hessian(beta))


# -- GP-Poisson geostatistics ----------------------------------------------------

GP_JITTER = 1e-10


@dataclass(frozen=True)
class GeoPoissonData:
    sites: np.ndarray
    durations: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        sites = np.atleast_2d(np.asarray(self.sites, dtype=float))
        durations = np.atleast_1d(np.asarray(self.durations, dtype=float))
        counts = np.atleast_1d(np.asarray(self.counts)).astype(np.int64)
        n = sites.shape[0]
        if sites.shape != (n, 2) or durations.shape != (n,) or counts.shape != (n,):
            raise ValueError("sites (n, 2), durations (n,) and counts (n,) must agree")
        if np.any(durations <= 0):
            raise ValueError("durations must be positive")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        for name, arr in (("sites", sites), ("durations", durations), ("counts", counts)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_sites(self) -> int:
        return self.counts.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["site_x", "site_y", "duration", "count"])
            for (sx, sy), t, y in zip(self.sites, self.durations, self.counts):
                writer.writerow([repr(float(sx)), repr(float(sy)), repr(float(t)), int(y)])

    @classmethod
    def from_csv(cls, path) -> GeoPoissonData:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: no data rows")
        return cls(
            sites=[[float(r["site_x"]), float(r["site_y"])] for r in rows],
            durations=[float(r["duration"]) for r in rows],
            counts=[int(r["count"]) for r in rows],
        )


@dataclass(frozen=True)
class GeoPoissonState:
    beta: float
    log_sigma2: float
    log_alpha: float
    s: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.beta, self.log_sigma2, self.log_alpha], self.s])

    @classmethod
    def from_vector(cls, v) -> GeoPoissonState:
        v = np.asarray(v, dtype=float)
        return cls(v[0], v[1], v[2], v[3:])


def pairwise_distances(sites: np.ndarray) -> np.ndarray:
    diff = sites[:, None, :] - sites[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def gp_covariance(dist: np.ndarray, sigma2: float, alpha: float) -> np.ndarray:
    """``sigma2 * exp(-alpha * d)`` (exponent delta fixed at 1)."""
    return sigma2 * np.exp(-alpha * dist)


class GeoPoissonPosterior:
    """Log posterior over ``(beta, log sigma2, log alpha, s_1..s_n)``."""

    def __init__(self, data: GeoPoissonData):
        self.data = data
        self._dist = pairwise_distances(data.sites)
        self._log_t = np.log(data.durations)
        self._t = data.durations
        self._y = data.counts.astype(float)

    @property
    def dim(self) -> int:
        return self.data.n_sites + 3

    def log_density(self, v) -> float:
        beta, log_sigma2, log_alpha = v[0], v[1], v[2]
        s = v[3:]
        sigma2, alpha = math.exp(min(log_sigma2, 700.0)), math.exp(min(log_alpha, 700.0))
        if not (0.0 < sigma2 < math.inf and 0.0 < alpha < math.inf):
            return -math.inf
        eta = beta + s
        with np.errstate(over="ignore"):
            loglik = float(np.dot(self._y, self._log_t + eta) - np.dot(self._t, np.exp(eta)))
        if math.isnan(loglik) or loglik == -math.inf:
            return -math.inf
        cov = gp_covariance(self._dist, sigma2, alpha)
        cov[np.diag_indices_from(cov)] += GP_JITTER
        try:
            chol = linalg.cholesky(cov, lower=True, check_finite=False)
        except linalg.LinAlgError:
            return -math.inf
        w = linalg.solve_triangular(chol, s, lower=True, check_finite=False)
        log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return loglik - 0.5 * float(np.dot(w, w)) - 0.5 * log_det


def gp_poisson_log_posterior(state: GeoPoissonState, data: GeoPoissonData) -> float:
    return GeoPoissonPosterior(data).log_density(state.to_vector())


def jittered_grid(n_sites: int, rng: np.random.Generator) -> np.ndarray:
    """``n_sites`` points in the unit square, one per cell of a square grid."""
    side = math.ceil(math.sqrt(n_sites))
    cells = np.array([(i, j) for j in range(side) for i in range(side)][:n_sites], dtype=float)
    jitter = rng.uniform(-0.25, 0.25, size=cells.shape)
    return (cells + 0.5 + jitter) / side


def make_synthetic_geo_data(
    n_sites: int,
    true_params: tuple[float, float, float] = (0.5, 1.0, 0.1),
    seed: int | None = 0,
    durations=1.0,
) -> tuple[GeoPoissonData, GeoPoissonState]:
    """Simulate a GP-Poisson data set.

    Args:
        n_sites: number of sites on a jittered grid in [0, 1]^2.
        true_params: ``(beta, sigma2, alpha)``.
        seed: seed for ``numpy.random.default_rng``.
        durations: observation durations, scalar or one per site.

    Returns:
        The data and the true state (with the simulated latent field).
    """
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    beta, sigma2, alpha = true_params
    rng = np.random.default_rng(seed)
    sites = jittered_grid(n_sites, rng)
    cov = gp_covariance(pairwise_distances(sites), sigma2, alpha)
    cov[np.diag_indices_from(cov)] += GP_JITTER
    s = np.linalg.cholesky(cov) @ rng.standard_normal(n_sites)
    t = np.broadcast_to(np.asarray(durations, dtype=float), (n_sites,)).copy()
    counts = rng.poisson(t * np.exp(beta + s))
    data = GeoPoissonData(sites, t, counts)
    return data, GeoPoissonState(beta, math.log(sigma2), math.log(alpha), s)


def geo_tmcmc_scales(n_sites: int, factor: float = 1.0) -> np.ndarray:
    """Additive scales ``(2, 5, 5, 2, ..., 2)`` times ``factor``."""
    return factor * np.concatenate([[2.0, 5.0, 5.0], np.full(n_sites, 2.0)])


# -- circular model -----------------------------------------------------------------


def circular_unnorm_log_f(y, nu):
    """``cos(y + nu sin y)``, the log of the unnormalized circular density."""
    return np.cos(y + nu * np.sin(y))


def circular_loglik(y, nu) -> float:
    """Unnormalized log likelihood of an i.i.d. sample (sum over entries)."""
    return float(np.sum(np.cos(y + nu * np.sin(y))))


def circular_log_Z(nu: float, epsabs: float = 1e-12) -> float:
    """Log normalizer of ``f(. | nu)`` over (-pi, pi] by adaptive quadrature.

    Raises:
        RuntimeError: if the quadrature error estimate exceeds 1e-10.
    """
    value, err = integrate.quad(
        lambda y: math.exp(math.cos(y + nu * math.sin(y))), -math.pi, math.pi,
        epsabs=epsabs, epsrel=1e-13, limit=200,
    )
    if not err < 1e-10:
        raise RuntimeError(f"quadrature for Z({nu}) did not converge (error {err:g})")
    return math.log(value)
