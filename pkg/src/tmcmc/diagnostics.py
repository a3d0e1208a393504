"""Posterior summaries, autocorrelations, circular histograms and CSV output."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

QUANTILE_LEVELS = (2.5, 25.0, 50.0, 75.0, 97.5)


@dataclass(frozen=True)
class SummaryRow:
    variable: str
    method: str
    acceptance_pct: float
    mean: float
    std: float
    q2_5: float
    q25: float
    q50: float
    q75: float
    q97_5: float

    @property
    def quantiles(self) -> tuple[float, ...]:
        return (self.q2_5, self.q25, self.q50, self.q75, self.q97_5)


SUMMARY_COLUMNS = tuple(SummaryRow.__dataclass_fields__)


def summarize(chain, index: int, variable: str = "", method: str = "", acceptance=None) -> SummaryRow:
    """Mean, sd (n-1 denominator) and type-7 quantiles of one variable.

    ``chain`` is a `ChainResult` or a draws matrix; ``acceptance`` (a
    fraction) defaults to the chain's overall acceptance rate.
    """
    draws = getattr(chain, "draws", chain)
    series = np.asarray(draws, dtype=float)[:, index]
    if series.size < 2:
        raise ValueError("need at least 2 stored draws")
    if acceptance is None:
        acceptance = getattr(chain, "acceptance_rate", math.nan)
    q = np.percentile(series, QUANTILE_LEVELS, method="linear")
    return SummaryRow(
        variable or f"x{index}",
        method,
        100.0 * float(acceptance),
        float(series.mean()),
        float(series.std(ddof=1)),
        *(float(v) for v in q),
    )


def acf(series, max_lag: int) -> np.ndarray:
    """Biased sample autocorrelations at lags ``0..max_lag``."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError("need 0 <= max_lag < len(series)")
    x = x - x.mean()
    c0 = float(np.dot(x, x)) / n
    if c0 == 0.0:
        raise ValueError("series has zero variance")
    # zero-padded FFT gives the linear (not circular) autocovariance
    size = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(x, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[: max_lag + 1] / n
    out = acov / c0
    out[0] = 1.0
    return out


def circular_histogram_density(angles, n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Histogram density of angles on (-pi, pi] with equal-width bins.

    Returns bin centers and densities; the densities integrate to one.
    """
    if n_bins < 2:
        raise ValueError("need at least 2 bins")
    a = np.asarray(angles, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("no angles")
    width = 2 * math.pi / n_bins
    # bins are (lo, hi]; angle pi falls in the last bin
    idx = np.ceil((a + math.pi) / width).astype(np.int64) - 1
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    centers = -math.pi + width * (np.arange(n_bins) + 0.5)
    return centers, counts / (a.size * width)


# -- CSV ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write rows with a header; floats use shortest round-trip repr."""
    path = Path(path)
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_summary_csv(path, rows: Sequence[SummaryRow]) -> Path:
    return write_csv(path, SUMMARY_COLUMNS, (tuple(asdict(r).values()) for r in rows))


def write_trace_csv(path, draws, names: Sequence[str], start: int = 0, step: int = 1) -> Path:
    draws = np.asarray(draws)
    iters = start + step * np.arange(draws.shape[0])
    return write_csv(path, ["iteration", *names], ([int(i), *row] for i, row in zip(iters, draws)))


def write_acf_csv(path, acfs: dict[str, np.ndarray]) -> Path:
    names = list(acfs)
    lags = len(next(iter(acfs.values())))
    return write_csv(path, ["lag", *names], ([lag, *(acfs[n][lag] for n in names)] for lag in range(lags)))
