import math

import pytest
from scipy import stats

from tmcmc.bounds import (
    BoundInput,
    argument_ratio,
    bound_sweep,
    hmc_displacement_bound,
    rwmh_displacement_bound,
    tmcmc_displacement_bound,
)

# frozen from an independent evaluation: scipy.stats.norm.cdf / logcdf
RWMH_160 = 1.874419e-19


def test_golden_k160():
    b = BoundInput(0.1, 2.0, 160)
    assert rwmh_displacement_bound(b) == pytest.approx(RWMH_160, rel=1e-4)
    assert tmcmc_displacement_bound(b) == pytest.approx(0.003, abs=2e-4)


def test_golden_matches_log_domain_oracle():
    arg = (0.1**2 / 4 - 160) / math.sqrt(320)
    assert rwmh_displacement_bound(BoundInput(0.1, 2.0, 160)) == pytest.approx(math.exp(stats.norm.logcdf(arg)), rel=1e-12)


def test_small_examples():
    assert rwmh_displacement_bound(BoundInput(1, 1, 2)) == pytest.approx(0.308538, abs=1e-6)
    assert rwmh_displacement_bound(BoundInput(2.0, 1.0, 4)) == 0.5
    assert tmcmc_displacement_bound(BoundInput(1, 1, 1)) == pytest.approx(0.682689, abs=1e-6)
    assert tmcmc_displacement_bound(BoundInput(0.0, 1.0, 5)) == 0.0
    # variance of a noncentral chi2_k(lam) is 2(k + 2 lam) = 40 here
    assert hmc_displacement_bound(BoundInput(1, 1, 10, dt=0.5, lam=5)) == pytest.approx(stats.norm.cdf(-11 / math.sqrt(40)), abs=1e-12)
    assert hmc_displacement_bound(BoundInput(1, 1, 10, dt=0.5, lam=5)) == pytest.approx(0.041, abs=1e-4)
    assert hmc_displacement_bound(BoundInput(3.0, 1, 5, dt=1.0, lam=4)) == 0.5


def test_hmc_reduces_to_rwmh():
    for k in (1, 7, 160):
        b = BoundInput(0.7, 1.3, k, dt=1.3, lam=0.0)
        assert hmc_displacement_bound(b) == rwmh_displacement_bound(b)


def test_hmc_needs_dt():
    with pytest.raises(ValueError):
        hmc_displacement_bound(BoundInput(1, 1, 1))


@pytest.mark.parametrize("kwargs", [dict(c=-1, K=1, k=1), dict(c=1, K=0, k=1), dict(c=1, K=1, k=0),
                                    dict(c=1, K=1, k=1.5), dict(c=1, K=1, k=1, dt=0), dict(c=1, K=1, k=1, lam=-1)])
def test_invalid_inputs(kwargs):
    with pytest.raises(ValueError):
        BoundInput(**kwargs)


def test_sweep_rows_and_ratio_growth():
    rows = bound_sweep([10, 40, 160, 640], BoundInput(0.1, 2.0, 1, dt=0.5, lam=1.0))
    assert [r["k"] for r in rows] == [10, 40, 160, 640]
    ratios = [r["tmcmc"] / r["rwmh"] for r in rows]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    for r in rows:
        for key in ("rwmh", "tmcmc", "hmc"):
            assert 0.0 <= r[key] <= 1.0
    assert all(b["rwmh"] <= a["rwmh"] for a, b in zip(rows, rows[1:]))


def test_sweep_single_k160_and_k1():
    (row,) = bound_sweep([160], BoundInput(0.1, 2.0, 160))
    assert row["rwmh"] == pytest.approx(RWMH_160, rel=1e-4) and row["hmc"] is None
    (row,) = bound_sweep([1], BoundInput(0.5, 1.0, 1))
    assert row["tmcmc"] == pytest.approx(2 * stats.norm.cdf(0.5) - 1)
    assert row["rwmh"] == pytest.approx(stats.norm.cdf((0.25 - 1) / math.sqrt(2)))
    assert row["tmcmc"] != row["rwmh"]
    with pytest.raises(ValueError):
        bound_sweep([], BoundInput(0.1, 2.0, 1))


def test_argument_ratio():
    b = BoundInput(0.1, 2.0, 160)
    assert argument_ratio(b) == pytest.approx((0.0025 - 160) * 2 / (0.1 * math.sqrt(2)))
