"""Sanity checks for the classical reference agent itself."""
import itertools

import pytest

from qaixi.builtin import MDP_REWARDS, MDP_TABLES
from qaixi.classical import ClassicalBayesAgent, iid_env, mdp_env


def test_mdp_sequence_probabilities_normalise():
    env = mdp_env(MDP_TABLES["mdp_a"], MDP_REWARDS)
    for acts in itertools.product(range(2), repeat=3):
        total = sum(env.sequence_probability(acts, outs) for outs in itertools.product(range(2), repeat=3))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_mdp_hand_computed_sequence():
    env = mdp_env(MDP_TABLES["mdp_a"], MDP_REWARDS)
    # start uniform; action 0 then observe 1: 0.5*0.2 + 0.5*0.7; then action 1 from 1 to 1: 0.9
    assert env.sequence_probability([0, 1], [1, 1]) == pytest.approx((0.5 * 0.2 + 0.5 * 0.7) * 0.9)


def test_two_coin_bayes():
    agent = ClassicalBayesAgent([iid_env([[0.9, 0.1]], [[1, 0]]), iid_env([[0.1, 0.9]], [[1, 0]])], [1, 1])
    assert agent.posterior([(0, 0)]) == pytest.approx([0.9, 0.1])
    assert agent.predictive([(0, 0)], 0)[0] == pytest.approx(0.82)


def test_known_bandit_value():
    agent = ClassicalBayesAgent([iid_env([[0.9, 0.1], [0.1, 0.9]], [[1, 0], [1, 0]])], [0], horizon=1)
    assert agent.value([]) == pytest.approx(0.9)
    assert agent.act([]) == 0
