import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _gen import random_binary
from ucal import fixtures
from ucal.agents import (
    AgentError,
    SwapFunction,
    UtilityMatrix,
    _realized_utility_by_action,
    best_response,
    best_responses,
    best_swap,
    hedge_probabilities,
    random_agent,
    squared_loss_agent,
    wager_agent,
)
from ucal.forecasters import sharp_sigmoid
from ucal.metrics import agent_reg, reg
from ucal.scoring import agent_to_rule
from ucal.transcript import Transcript


def test_utility_bounds_enforced():
    with pytest.raises(AgentError):
        UtilityMatrix([[2.0, 0.0]])
    UtilityMatrix([[2.0, 0.0]], bound=None)
    with pytest.raises(AgentError):
        UtilityMatrix([[0.0]])


def test_wager_best_responses():
    u = wager_agent()
    assert best_response(u, 0.5) == 1
    assert best_response(u, 0.05) == 0


def test_single_action_best_response():
    assert best_response(UtilityMatrix([[0.1, 0.2]]), 0.7) == 0


def test_ties_pick_lowest_index():
    u = UtilityMatrix([[0.5, 0.5], [0.5, 0.5]])
    assert best_response(u, 0.3) == 0


def test_hedge_uniform_on_empty_history():
    u = random_agent(np.random.default_rng(0), 4)
    assert np.allclose(hedge_probabilities(u, [], 0.3), 0.25)


def test_hedge_threshold_agent_matches_sigmoid():
    v, eta, t = 0.5, 0.2, 7
    u = UtilityMatrix([[v, v - 1], [-v, 1 - v]])  # action 0 bets on outcome 0
    probs = hedge_probabilities(u, np.ones(t - 1, dtype=int), eta)
    assert probs[0] == pytest.approx(float(sharp_sigmoid(eta * (t - 1) * (v - 1))), abs=1e-15)


def test_hedge_small_eta_is_near_uniform():
    u = random_agent(np.random.default_rng(1), 5, K=3)
    probs = hedge_probabilities(u, np.random.default_rng(2).integers(3, size=50), 1e-9)
    assert np.max(np.abs(probs - 0.2)) < 1e-6


def test_best_swap_identity_on_calibrated_transcript():
    t = fixtures.gen_named_transcript("exact", 20)
    assert best_swap(squared_loss_agent(t), t).is_identity


def test_best_swap_single_action():
    t = random_binary(np.random.default_rng(3), 30)
    assert best_swap(UtilityMatrix([[0.2, -0.1]]), t).is_identity


def test_squared_loss_swap_sends_p_to_frequency():
    t = Transcript([0.2, 0.2, 0.2, 0.2, 0.9, 0.9], [1, 1, 0, 0, 1, 0])
    u = squared_loss_agent(t)
    sw = best_swap(u, t)
    acts = np.asarray(u.labels)
    for p, freq in ((0.2, 0.5), (0.9, 0.5)):
        a = best_response(u, p)
        assert acts[a] == pytest.approx(p)
        assert acts[sw(a)] == pytest.approx(freq)


def _swap_objective(u, t, mapping):
    acts = best_responses(u, t.predictions)
    return float(u.u[np.asarray(mapping)[acts], t.outcomes].sum())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_best_swap_beats_identity_and_constants(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    u = random_agent(rng, n)
    t = random_binary(rng, 40)
    best = _swap_objective(u, t, best_swap(u, t).mapping)
    assert best >= _swap_objective(u, t, tuple(range(n))) - 1e-12
    for target in range(n):
        assert best >= _swap_objective(u, t, (target,) * n) - 1e-12
    if n <= 4:
        for mapping in itertools.product(range(n), repeat=n):
            assert best >= _swap_objective(u, t, mapping) - 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_agent_regret_equals_rule_regret(seed):
    rng = np.random.default_rng(seed)
    u = random_agent(rng, int(rng.integers(1, 6)))
    t = random_binary(rng, int(rng.integers(5, 60)))
    assert agent_reg(u, t) == pytest.approx(reg(agent_to_rule(u), t), abs=1e-12)


def test_realized_utility_table():
    u = UtilityMatrix([[1.0, 0.0], [0.0, 1.0]])
    gain = _realized_utility_by_action(u, np.array([0, 0, 1]), np.array([0, 1, 1]))
    assert gain.tolist() == [[1.0, 1.0], [0.0, 1.0]]


def test_swap_function_call():
    assert SwapFunction((1, 0))(0) == 1 and not SwapFunction((1, 0)).is_identity
