import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from carlton.agent import (HOLD, CarltonPolicy, PolicyParams, behavior_probabilities, epsilon_schedule,
                           mask_q, post_process, sample_action, select_action)
from carlton.neural import MlpParameters, forward
from carlton.observation import encode_state


def test_mask_examples():
    masked = mask_q([1.0, 2.0, 3.0], [0, 0.5, 1])
    assert masked[0] == -np.inf and list(masked[1:]) == [2.0, 3.0]
    assert mask_q([1.0, 2.0], [0, 0]) is HOLD
    assert np.array_equal(mask_q([1.0, 2.0], [0.1, 1]), [1.0, 2.0])


def test_probability_examples():
    assert np.allclose(behavior_probabilities([0.3, 0.3, -np.inf, 0.3]), [1 / 3, 1 / 3, 0, 1 / 3])
    assert np.allclose(behavior_probabilities([5.0, 0.0, 1.0], alpha=1.0), [1 / 3] * 3)
    assert np.allclose(behavior_probabilities([math.log(2), 0.0]), [2 / 3, 1 / 3], atol=1e-9)


q_values = st.lists(st.floats(-30, 30), min_size=2, max_size=12)


@given(q_values, st.floats(0, 1), st.floats(0.01, 10), st.data())
def test_behavior_distribution_is_valid(q, alpha, beta, data):
    mask = data.draw(st.lists(st.booleans(), min_size=len(q), max_size=len(q)))
    if all(mask):
        mask[0] = False
    masked = np.where(mask, -np.inf, q)
    p = behavior_probabilities(masked, alpha, beta)
    assert abs(p.sum() - 1) <= 1e-9
    assert np.all(p >= 0)
    assert np.all(p[np.array(mask)] == 0)


def test_all_masked_is_contract_violation():
    with pytest.raises(ValueError):
        behavior_probabilities([-np.inf, -np.inf])


def test_masked_channels_never_sampled():
    rng = np.random.default_rng(0)
    masked = mask_q([9.0, 0.0, 1.0, 2.0], [0.0, 0.5, 0.0, 0.25])
    draws = [sample_action(masked, 0.3, 1.0, rng) for _ in range(100_000)]
    counts = np.bincount(draws, minlength=4)
    assert counts[0] == 0 and counts[2] == 0
    p = behavior_probabilities(masked, 0.3, 1.0)
    assert np.allclose(counts / 1e5, p, atol=0.01)


def test_greedy_and_exploration_extremes():
    net = MlpParameters(4, 8, rng=1)
    qv = np.array([0.5, 0.0, 0.25, 1.0])
    state = encode_state(0, qv)
    masked = mask_q(forward(net, state), qv)
    rng = np.random.default_rng(0)
    greedy = PolicyParams(epsilon_b=0.0)
    assert all(select_action(state, qv, greedy, net, rng, 0) == int(np.argmax(masked)) for _ in range(50))
    explore = PolicyParams(epsilon_b=1.0)
    picks = {select_action(state, qv, explore, net, rng, 0) for _ in range(2000)}
    assert picks == {0, 2, 3}
    assert select_action(state, np.zeros(4), explore, net, rng, 2) == 2


def test_greedy_ties_pick_lowest_index():
    net = MlpParameters(3, 8, zero=True)
    qv = np.array([0.0, 0.4, 0.4])
    assert select_action(encode_state(0, qv), qv, PolicyParams(mode="greedy"), net, None, 0) == 1


@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=8), st.integers(-10**6, 10**6))
def test_greedy_invariant_to_constant_shift(q, c):
    # integer-valued Q keeps the shift exact in floating point
    qv = np.linspace(0, 1, len(q))
    q = np.array(q, dtype=float)
    assert np.argmax(mask_q(q + c, qv)) == np.argmax(mask_q(q, qv))


def test_epsilon_schedule():
    assert epsilon_schedule(1, 1000) == 0.5
    assert epsilon_schedule(500, 1000) == 0.01
    assert epsilon_schedule(1000, 1000) == 0.01
    assert epsilon_schedule(250, 1000) == pytest.approx(0.5 - 0.49 * 249 / 499)
    assert epsilon_schedule(250, 1000) == pytest.approx(0.255, abs=0.001)
    vals = [epsilon_schedule(i, 1000) for i in range(1, 1001)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        epsilon_schedule(0, 1000)


def test_post_process():
    assert post_process(0.9, 0.1, None) is True
    assert post_process(1.0, 1.0, 0.05) is False
    assert post_process(0.8, 0.9, 0.05) is True
    assert post_process(0.8, 0.83, 0.05) is False


def test_carlton_policy_phi_filter_holds_channel():
    net = MlpParameters(3, 8, zero=True)
    net.biases[-1][:] = [0.0, 0.0, 1.0]
    qv = np.array([0.8, 0.5, 0.82])
    assert CarltonPolicy(net).decide(0, qv, 0, None) == 2
    assert CarltonPolicy(net, phi=0.05).decide(0, qv, 0, None) == 0
    assert CarltonPolicy(net, phi=0.05).name == "carlton_phi=0.05"
