import itertools
import math

import numpy as np
import pytest
from scipy import stats

from tmcmc.discrete import (
    DiscreteEps,
    LatticeChain,
    SignChain,
    box_states,
    build_exact_kernel,
    detailed_balance_error,
    geometric_log_weight,
    ising_log_weight,
    lattice_tmcmc_step,
    parity_obstruction,
    reachable_set,
    sign_map,
    sign_reverse_move,
    sign_tmcmc_step,
    stationarity_error,
    stationary_weights,
    truncate_to_box,
    two_step_row,
)
from tmcmc.moves import MoveProbabilities, MoveTable

SPINS2 = list(itertools.product((-1, 1), repeat=2))
EPS = DiscreteEps.uniform_grid(1.0, 2.0, 4)


def flat(_):
    return 0.0


def test_single_spin_forward_flips(rng):
    assert sign_map((-1,), (1,)) == (1,)
    chain = SignChain(flat, MoveProbabilities.symmetric(1))
    assert chain.log_alpha((-1,), np.array([1])) == ((1,), 0.0)
    s, acc = sign_tmcmc_step((-1,), flat, MoveProbabilities.symmetric(1), rng)
    assert acc


def test_sign_map_ignores_eps():
    assert sign_map((-1, 1, -1), (1, -1, 0)) == (1, -1, -1)
    for eps in (1.01, 3.0, 100.0):
        assert [int(np.sign(x + z * eps)) for x, z in zip((-1, 1), (1, 1))] == [1, 1]


def test_reverse_move_is_involution():
    for s in itertools.product((-1, 1), repeat=3):
        for z in itertools.product((-1, 0, 1), repeat=3):
            if not any(z):
                continue
            s_new = sign_map(s, z)
            r = sign_reverse_move(s, s_new, z)
            assert sign_map(s_new, r) == s
            np.testing.assert_array_equal(sign_reverse_move(s_new, s, r), z)


def test_flat_target_symmetric_probs_always_accepts(rng):
    probs = MoveProbabilities.symmetric(3)
    s = (1, -1, 1)
    for _ in range(200):
        s, acc = sign_tmcmc_step(s, flat, probs, rng)
        assert acc


@pytest.mark.parametrize(
    "probs",
    [MoveProbabilities.symmetric(2), MoveProbabilities([0.3, 0.2], [0.2, 0.5]), MoveTable([0.1, 0.4, 0.3, 0.2])],
)
def test_ising_exact_kernel(probs):
    chain = SignChain(ising_log_weight(0.5), probs)
    K = build_exact_kernel(chain, SPINS2)
    pi = stationary_weights(chain.log_weight, SPINS2)
    np.testing.assert_allclose(K.sum(axis=1), 1.0, atol=1e-14)
    assert stationarity_error(pi, K) < 1e-12
    assert detailed_balance_error(pi, K) < 1e-12


def test_ising_weights():
    pi = stationary_weights(ising_log_weight(0.5), SPINS2)
    e = math.exp(0.5)
    np.testing.assert_allclose(pi, np.array([e, 1 / e, 1 / e, e]) / (2 * e + 2 / e))


def test_sign_chain_empirical_frequencies(rng):
    chain = SignChain(ising_log_weight(0.5), MoveProbabilities([0.3, 0.2], [0.2, 0.5]))
    index = {s: i for i, s in enumerate(SPINS2)}
    counts = np.zeros(4)
    s = (1, 1)
    n = 200_000
    for _ in range(n):
        s, _ = chain.step(s, rng)
        counts[index[s]] += 1
    # thin to near-independent counts before the chi-square test
    pi = stationary_weights(chain.log_weight, SPINS2)
    assert stats.chisquare(counts / 10, pi * n / 10).pvalue > 0.001


def test_lattice_r1_is_single_site_walk(rng):
    v = (0, 0)
    for _ in range(200):
        v_new, _ = lattice_tmcmc_step(v, flat, 1.0, MoveProbabilities.symmetric(2), rng)
        assert sum(a != b for a, b in zip(v, v_new)) <= 1
        v = v_new


def test_lattice_joint_moves_change_every_coordinate(rng):
    v = (0, 0, 0)
    for _ in range(100):
        v_new, acc = lattice_tmcmc_step(v, flat, 0.0, MoveProbabilities.symmetric(3), rng)
        assert acc and all(a != b for a, b in zip(v, v_new))
        v = v_new


def test_lattice_r_validation():
    with pytest.raises(ValueError):
        LatticeChain(flat, MoveProbabilities.symmetric(2), 1.5)


@pytest.mark.parametrize("r", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("probs", [MoveProbabilities.symmetric(2), MoveProbabilities([0.8, 0.3], [0.2, 0.7])])
def test_geometric_exact_kernel(r, probs):
    states = box_states(-4, 4, 2)
    lw = truncate_to_box(geometric_log_weight(0.5), -4, 4)
    K = build_exact_kernel(LatticeChain(lw, probs, r), states, EPS)
    pi = stationary_weights(lw, states)
    np.testing.assert_allclose(K.sum(axis=1), 1.0, atol=1e-14)
    assert stationarity_error(pi, K) < 1e-12
    assert detailed_balance_error(pi, K) < 1e-12


def test_lattice_with_holds_is_stationary():
    states = box_states(-2, 2, 2)
    lw = truncate_to_box(geometric_log_weight(0.6), -2, 2)
    probs = MoveProbabilities([0.3, 0.4], [0.3, 0.2])
    K = build_exact_kernel(LatticeChain(lw, probs, 0.5), states, DiscreteEps((1.0, 2.5), (0.5, 0.5)))
    assert stationarity_error(stationary_weights(lw, states), K) < 1e-12


def test_parity_obstruction_without_branch():
    states = box_states(-3, 3, 2)
    lw = truncate_to_box(geometric_log_weight(0.5), -3, 3)
    K0 = build_exact_kernel(LatticeChain(lw, MoveProbabilities.symmetric(2), 0.0), states, EPS)
    start = states.index((1, 2))
    assert parity_obstruction(states, K0, (1, 2))
    reach = reachable_set(K0, start)
    assert all((states[j][0] + states[j][1]) % 2 == 1 for j in reach)
    assert not np.all(two_step_row(K0, start) > 0)
    Kr = build_exact_kernel(LatticeChain(lw, MoveProbabilities.symmetric(2), 0.5), states, EPS)
    assert not parity_obstruction(states, Kr, (1, 2))
    assert len(reachable_set(Kr, start)) == len(states)


def test_two_step_positive_with_branch():
    states = box_states(-2, 2, 2)
    lw = truncate_to_box(geometric_log_weight(0.5), -2, 2)
    K = build_exact_kernel(LatticeChain(lw, MoveProbabilities.symmetric(2), 0.5), states, EPS)
    assert np.all(two_step_row(K, states.index((0, 0))) > 0)


def test_empirical_lattice_frequencies(rng):
    states = box_states(-1, 1, 2)
    lw = truncate_to_box(geometric_log_weight(0.5), -1, 1)
    chain = LatticeChain(lw, MoveProbabilities.symmetric(2), 0.5)
    index = {s: i for i, s in enumerate(states)}
    counts = np.zeros(len(states))
    v = (0, 0)
    n = 300_000
    for _ in range(n):
        v, _ = chain.step(v, rng)
        counts[index[v]] += 1
    pi = stationary_weights(lw, states)
    assert stats.chisquare(counts / 10, pi * n / 10).pvalue > 0.001


def test_kernel_size_limit():
    states = [(i,) for i in range(10_001)]
    with pytest.raises(ValueError):
        build_exact_kernel(LatticeChain(flat, MoveProbabilities.symmetric(1), 0.5), states, EPS)


def test_proposal_leaving_state_list_is_an_error():
    states = box_states(-1, 1, 1)
    with pytest.raises(ValueError):
        build_exact_kernel(LatticeChain(flat, MoveProbabilities.symmetric(1), 0.5), states, EPS)


def test_eps_law_validation(rng):
    with pytest.raises(ValueError):
        DiscreteEps((1.0, 1.5), (0.5, 0.6))
    assert DiscreteEps((1.5,), (1.0,)).sample(rng) == 1.5
    grid = DiscreteEps.uniform_grid(1.0, 2.0, 4)
    assert all(1.0 <= v < 2.0 for v in grid.values)
