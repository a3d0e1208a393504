import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmcmc.errors import DomainError
from tmcmc.transforms import ADDITIVE, LOG_ADDITIVE, MULTIPLICATIVE, TransformFamily, apply_move, conjugate


def test_additive_example():
    x, logj = apply_move([1.0, 2.0], 0.5, [1, -1], TransformFamily.additive([1, 1]))
    np.testing.assert_allclose(x, [1.5, 1.5])
    assert logj == 0.0


def test_multiplicative_example():
    x, logj = apply_move([2.0, 3.0], 0.5, [1, -1], TransformFamily.multiplicative(2))
    np.testing.assert_allclose(x, [1.0, 6.0])
    assert logj == pytest.approx(0.0, abs=1e-15)


def test_challenger_published_transformation():
    fam = TransformFamily.additive([7.3773, 4.3227])
    x, _ = apply_move([0.0, 0.0], 1.0, [1, 1], fam)
    np.testing.assert_allclose(x, [7.3773, 4.3227])


def test_conjugate_examples():
    np.testing.assert_array_equal(conjugate([1, -1]), [-1, 1])
    np.testing.assert_array_equal(conjugate([1, 0, -1]), [-1, 0, 1])
    np.testing.assert_array_equal(conjugate(conjugate([1, 1])), [1, 1])


def test_domains():
    assert 0.3 in TransformFamily.additive([1.0]).domain
    assert -0.3 not in TransformFamily.additive([1.0]).domain
    mult = TransformFamily.multiplicative(1).domain
    assert -0.5 in mult and 0.5 in mult and 0.0 not in mult and 1.0 not in mult
    assert -0.5 not in TransformFamily.log_additive(1).domain
    mixed = TransformFamily((ADDITIVE, MULTIPLICATIVE), [1.0, 1.0]).domain
    assert 0.5 in mixed and -0.5 not in mixed


def test_errors():
    fam = TransformFamily.multiplicative(2)
    with pytest.raises(DomainError):
        apply_move([0.0, 1.0], 0.5, [1, 1], fam)
    # a held zero coordinate is fine
    apply_move([0.0, 1.0], 0.5, [0, 1], fam)
    with pytest.raises(DomainError):
        apply_move([1.0, 1.0], 1.5, [1, 1], fam)
    with pytest.raises(DomainError):
        apply_move([-1.0], 0.5, [1], TransformFamily.log_additive(1))
    with pytest.raises(ValueError):
        apply_move([1.0, 1.0], 0.5, [0, 0], TransformFamily.additive([1, 1]))
    with pytest.raises(ValueError):
        TransformFamily.additive([1.0, 0.0])
    with pytest.raises(ValueError):
        TransformFamily(("bogus",), [1.0])


kinds = st.sampled_from((ADDITIVE, MULTIPLICATIVE, LOG_ADDITIVE))


@st.composite
def move_cases(draw):
    k = draw(st.integers(1, 6))
    ks = tuple(draw(kinds) for _ in range(k))
    scales = [draw(st.floats(0.1, 3.0)) for _ in range(k)]
    fam = TransformFamily(ks, scales)
    x = np.array([draw(st.floats(0.1, 10.0)) * (1 if kk == LOG_ADDITIVE else draw(st.sampled_from((1, -1)))) for kk in ks])
    dom = fam.domain
    if dom.high == math.inf:
        eps = draw(st.floats(1e-3, 5.0))
    elif dom.low < 0 and dom.exclude_zero:
        eps = draw(st.floats(0.05, 0.95)) * draw(st.sampled_from((1, -1)))
    else:
        eps = draw(st.floats(0.05, 0.95))
    z = np.array([draw(st.sampled_from((-1, 0, 1))) for _ in range(k)])
    if not z.any():
        z[0] = 1
    return fam, x, eps, z


@settings(max_examples=1000, deadline=None)
@given(move_cases())
def test_conjugacy_round_trip(case):
    fam, x, eps, z = case
    y, _ = apply_move(x, eps, z, fam)
    back, _ = apply_move(y, eps, conjugate(z), fam)
    np.testing.assert_allclose(back, x, rtol=1e-12, atol=1e-12)


@settings(max_examples=1000, deadline=None)
@given(move_cases())
def test_jacobian_reciprocity(case):
    fam, x, eps, z = case
    y, lj = apply_move(x, eps, z, fam)
    _, lj_back = apply_move(y, eps, conjugate(z), fam)
    assert lj + lj_back == 0.0
    if fam.is_additive:
        assert lj == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.floats(0.1, 5.0))
def test_forward_backward_images_disjoint(x, a):
    fam = TransformFamily.additive([a])
    eps = np.linspace(1e-3, 10, 50)
    fwd = np.array([apply_move([x], e, [1], fam)[0][0] for e in eps])
    bwd = np.array([apply_move([x], e, [-1], fam)[0][0] for e in eps])
    assert fwd.min() > x > bwd.max()
