import numpy as np
import pytest
from hypothesis import given, strategies as st

from quasiperiodic.fsm import FsmSpec, counter_fsm
from quasiperiodic.markov import (
    DIRECT_SOLVE_LIMIT,
    MarkovChainError,
    activation,
    activation_curve,
    counter_activation,
    stationary,
    to_markov_chain,
)

GRID = np.round(np.arange(0.01, 1.0, 0.04), 2)


def residual(chain, pi):
    return np.abs(pi @ chain.matrix - pi).max()


def test_depth_one_matrix():
    chain = to_markov_chain(counter_fsm(1), 0.3)
    np.testing.assert_allclose(chain.matrix, [[0.7, 0.3], [0.7, 0.3]])
    np.testing.assert_allclose(stationary(chain), [0.7, 0.3], atol=1e-14)


def test_depth_three_half_is_uniform():
    chain = to_markov_chain(counter_fsm(3), 0.5)
    P = chain.matrix
    assert np.all((P == 0) | (P == 0.5))
    np.testing.assert_allclose(stationary(chain), np.full(6, 1 / 6), atol=1e-14)


def test_depth_three_p06_against_hand_solve():
    # birth-death chain: pi_k proportional to r**k
    r = 1.5
    pi = r ** np.arange(6)
    pi /= pi.sum()
    got = stationary(to_markov_chain(counter_fsm(3), 0.6))
    np.testing.assert_allclose(got, pi, atol=1e-14)
    assert activation(counter_fsm(3), 0.6) == pytest.approx(r**3 / (1 + r**3), abs=1e-12)
    assert activation(counter_fsm(3), 0.6) == pytest.approx(0.771428, abs=1e-6)


def test_absorbing_limits():
    f = counter_fsm(3)
    np.testing.assert_array_equal(stationary(to_markov_chain(f, 0.0)), np.eye(6)[0])
    np.testing.assert_array_equal(stationary(to_markov_chain(f, 1.0)), np.eye(6)[5])
    assert activation(f, 0.0) == 0.0 and activation(f, 1.0) == 1.0


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_rejects_bad_p(p):
    with pytest.raises(ValueError):
        to_markov_chain(counter_fsm(2), p)


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
def test_closed_form_agreement(d):
    q = activation_curve(counter_fsm(d), GRID).q
    r = GRID / (1 - GRID)
    np.testing.assert_allclose(q, r**d / (1 + r**d), atol=1e-10, rtol=0)
    np.testing.assert_allclose(counter_activation(d, GRID), q, atol=1e-10, rtol=0)


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
@pytest.mark.parametrize("p", [0.01, 0.3, 0.5, 0.77, 0.99])
def test_residual_and_rows(d, p):
    chain = to_markov_chain(counter_fsm(d), p)
    np.testing.assert_allclose(chain.matrix.sum(axis=1), 1.0, atol=1e-12)
    pi = stationary(chain)
    assert pi.min() >= 0
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert residual(chain, pi) < 1e-12


def test_linear_at_depth_one():
    np.testing.assert_allclose(activation_curve(counter_fsm(1), GRID).q, GRID, atol=1e-12)


@given(st.integers(1, 10), st.floats(0.0, 1.0))
def test_symmetry(d, p):
    f = counter_fsm(d)
    assert activation(f, p) + activation(f, 1 - p) == pytest.approx(1.0, abs=1e-9)


def test_monotone():
    q = activation_curve(counter_fsm(4), np.linspace(0, 1, 41)).q
    assert np.all(np.diff(q) >= -1e-15)


def test_logistic_match_depth_three():
    e = np.linspace(-0.1, 0.1, 201)
    q = activation_curve(counter_fsm(3), 0.5 + e).q
    assert np.abs(q - 1 / (1 + np.exp(-12 * e))).max() < 0.01


def test_two_closed_classes_rejected():
    # from state 0 the first input decides between two absorbing states
    trans = {(0, 0): 1, (0, 1): 2, (1, 0): 1, (1, 1): 1, (2, 0): 2, (2, 1): 2}
    chain = to_markov_chain(FsmSpec(3, trans, (0, 0, 1)), 0.4)
    with pytest.raises(MarkovChainError):
        stationary(chain)


def test_transient_states_get_zero_mass():
    # state 0 is left forever after the first input; the rest is a depth-1 counter
    trans = {(0, 0): 1, (0, 1): 2, (1, 0): 1, (1, 1): 2, (2, 0): 1, (2, 1): 2}
    pi = stationary(to_markov_chain(FsmSpec(3, trans, (1, 0, 1)), 0.25))
    np.testing.assert_allclose(pi, [0, 0.75, 0.25], atol=1e-14)


def test_power_iteration_path():
    d = DIRECT_SOLVE_LIMIT // 2 + 10
    p = 0.52
    q = activation(counter_fsm(d), p)
    assert q == pytest.approx(float(counter_activation(d, p)), abs=1e-8)


def test_curve_csv():
    text = activation_curve(counter_fsm(1), [0.0, 0.5]).to_csv()
    assert text.splitlines() == ["p,q", "0,0", "0.5,0.5"]
