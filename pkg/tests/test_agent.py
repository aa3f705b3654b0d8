import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qaixi import bell
from qaixi import channels as ch
from qaixi.agent import (
    AgentState,
    JointState,
    PlanningConfig,
    decohering_update,
    entangled_step,
    joint_outcome_distribution,
    policy_value_under,
    q_values,
    qaixi_policy,
    run_episode,
    value,
)
from qaixi.builtin import MDP_BITS, MDP_REWARDS, MDP_TABLES, commuting_class
from qaixi.classical import ClassicalBayesAgent, mdp_env
from qaixi.core import DensityOperator, bell_state, random_density
from qaixi.environments import ActionSpec, make_classical_env
from qaixi.errors import CapacityError
from qaixi.induction import mixture_init, mixture_update, posterior_divergence, predictive_distribution


def coin(p, bits=1, name=None):
    return make_classical_env([[p, 1 - p]], [[1.0, 0.0]], bits, name or f"c{p}")


def always_reward():
    return make_classical_env([[1.0, 0.0], [1.0, 0.0]], [[1.0, 1.0], [1.0, 1.0]], 0, "always")


def bandit():
    """Arm 0 pays with probability 0.9, arm 1 with 0.1."""
    return make_classical_env([[0.9, 0.1], [0.1, 0.9]], [[1.0, 0.0], [1.0, 0.0]], 0, "bandit")


# -- planning ----------------------------------------------------------------

def test_geometric_value():
    mix = mixture_init([always_reward()])
    assert value(mix, PlanningConfig(3, 0.5)) == pytest.approx(1.75, abs=1e-15)
    assert value(mix, PlanningConfig(3, 0.5), depth=0) == 0.0


def test_zero_rewards_zero_value():
    env = make_classical_env([[0.3, 0.7], [0.6, 0.4]], [[0, 0], [0, 0]], 0, "none")
    for m in range(1, 5):
        assert value(mixture_init([env]), PlanningConfig(m, 0.9)) == 0.0


def test_two_armed_bandit():
    mix = mixture_init([bandit()])
    cfg = PlanningConfig(1, 0.9)
    assert value(mix, cfg) == pytest.approx(0.9, abs=1e-15)
    assert qaixi_policy(mix, cfg) == 0


def test_known_env_prefers_rewarding_action():
    env = make_classical_env([[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]], 0, "only0")
    assert qaixi_policy(mixture_init([env]), PlanningConfig(2, 0.9)) == 0


def test_tie_goes_to_lowest_id():
    mix = mixture_init([always_reward()])
    q = q_values(mix, PlanningConfig(3, 0.9))
    assert q[0] == q[1]
    assert qaixi_policy(mix, PlanningConfig(3, 0.9)) == 0
    sym = make_classical_env([[0.7, 0.3], [0.3, 0.7]], [[1, 0], [0, 1]], 1, "a")
    mirror = make_classical_env([[0.3, 0.7], [0.7, 0.3]], [[1, 0], [0, 1]], 1, "b")
    assert qaixi_policy(mixture_init([sym, mirror]), PlanningConfig(2, 0.9)) == 0


def test_capacity_and_config_errors():
    mix = mixture_init([bell.make_chsh_env()])
    with pytest.raises(CapacityError):
        value(mix, PlanningConfig(6, 0.9))
    with pytest.raises(ValueError):
        PlanningConfig(7, 0.9)
    with pytest.raises(ValueError):
        PlanningConfig(2, 1.0)


def all_histories(max_len, n_actions=2, n_outcomes=2):
    for n in range(max_len + 1):
        for seq in itertools.product(itertools.product(range(n_actions), range(n_outcomes)), repeat=n):
            yield list(seq)


def test_commuting_limit_matches_classical_agent():
    envs = commuting_class()
    ref = ClassicalBayesAgent([mdp_env(MDP_TABLES[e.name], MDP_REWARDS) for e in envs],
                              [MDP_BITS[e.name] for e in envs], horizon=3, gamma=0.9)
    cfg = PlanningConfig(3, 0.9)
    checked = 0
    for hist in all_histories(3):
        if ref.xi(hist) <= 1e-12:
            continue
        mix = mixture_init(envs)
        for a, k in hist:
            mix = mixture_update(mix, a, k)
        q = q_values(mix, cfg)
        assert np.allclose([q[0], q[1]], ref.q_values(hist), atol=1e-10)
        assert qaixi_policy(mix, cfg) == ref.act(hist)
        checked += 1
    assert checked >= 64


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.0, 2.0), st.integers(1, 3))
def test_reward_shift_moves_q_affinely(p, q, c, m):
    """Rewards r -> (r + c)/(1 + c) map Q -> (Q + c * S)/(1 + c), S = sum of gamma^i."""
    gamma = 0.8
    probs = [[p, 1 - p], [q, 1 - q]]
    base = np.array([[1.0, 0.2], [0.6, 0.0]])
    e1 = make_classical_env(probs, base, 1, "e1")
    e2 = make_classical_env(probs, (base + c) / (1 + c), 1, "e2")
    cfg = PlanningConfig(m, gamma)
    q1, q2 = q_values(mixture_init([e1]), cfg), q_values(mixture_init([e2]), cfg)
    s = sum(gamma ** i for i in range(m))
    for a in q1:
        assert q2[a] == pytest.approx((q1[a] + c * s) / (1 + c), abs=1e-12)


@given(st.lists(st.floats(0.05, 0.95), min_size=2, max_size=3), st.integers(1, 3))
def test_bellman_consistency(biases, m):
    envs = [make_classical_env([[p, 1 - p], [1 - p, p]], [[1, 0], [0.5, 0]], 1, f"e{i}")
            for i, p in enumerate(biases)]
    mix = mixture_init(envs)
    cfg = PlanningConfig(m, 0.9)
    for a in (0, 1):
        pred = predictive_distribution(mix, a)
        rhs = sum(pred[k] * (mix.action_spec(a).rewards[k]
                             + 0.9 * value(mixture_update(mix, a, k), cfg, m - 1))
                  for k in (0, 1))
        assert q_values(mix, cfg)[a] == pytest.approx(rhs, abs=1e-12)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(1, 3))
def test_informed_agent_dominates(p, q, m):
    """An agent that knows the truth earns at least as much as the Bayes agent."""
    truth = make_classical_env([[p, 1 - p], [q, 1 - q]], [[1, 0], [0, 1]], 1, "t")
    other = make_classical_env([[1 - p, p], [1 - q, q]], [[1, 0], [0, 1]], 1, "o")
    cfg = PlanningConfig(m, 0.9)
    informed = policy_value_under(truth, truth.initial_state, mixture_init([truth]), cfg)
    bayes = policy_value_under(truth, truth.initial_state, mixture_init([truth, other]), cfg)
    assert informed == pytest.approx(value(mixture_init([truth]), cfg), abs=1e-12)
    assert bayes <= informed + 1e-12


# -- interaction loop --------------------------------------------------------

def test_zero_cycles():
    envs = [coin(0.9, 1, "a"), coin(0.1, 1, "b")]
    agent = AgentState(mixture_init(envs))
    hist, trace = run_episode(envs[0], agent, PlanningConfig(1, 0.9), 0, seed=1)
    assert len(hist) == 0
    assert trace.divergence[0] == pytest.approx(
        posterior_divergence(mixture_init(envs), envs[0].initial_state))


def test_two_coin_posterior_concentrates():
    envs = [coin(0.9, 1, "a"), coin(0.1, 1, "b")]
    finals = []
    for seed in range(20):
        _, trace = run_episode(envs[0], AgentState(mixture_init(envs)), PlanningConfig(1, 0.9), 100, seed)
        finals.append(trace.weights[-1, 0])
    assert np.mean(finals) >= 0.99


def test_deterministic_truth_identified_in_one_step():
    envs = [coin(1.0, 1, "up"), coin(0.0, 1, "down")]
    _, trace = run_episode(envs[0], AgentState(mixture_init(envs)), PlanningConfig(1, 0.9), 3, seed=0)
    assert trace.divergence[0] > 0
    assert np.all(np.abs(trace.divergence[1:]) <= 1e-12)


def test_episode_reproducible():
    envs = commuting_class()

    def run(seed):
        hist, trace = run_episode(envs[0], AgentState(mixture_init(envs)), PlanningConfig(2, 0.9), 15, seed)
        return hist.to_json(), trace.divergence.tolist()

    assert run(4) == run(4)
    assert run(4) != run(5)


def test_internal_update_applied():
    agent = AgentState(mixture_init([coin(0.5)]),
                       DensityOperator(np.full((2, 2), 0.5)), decohering_update(2))
    run_episode(coin(0.5), agent, PlanningConfig(1, 0.9), 2, seed=0)
    assert np.allclose(agent.internal_state.matrix, np.eye(2) / 2)


def test_callable_and_unknown_policy():
    envs = commuting_class()
    hist, _ = run_episode(envs[0], AgentState(mixture_init(envs)), PlanningConfig(1, 0.9), 5, 0,
                          policy=lambda mix, rng: 1)
    assert [c.action for c in hist.cycles] == [1] * 5
    with pytest.raises(ValueError):
        run_episode(envs[0], AgentState(mixture_init(envs)), PlanningConfig(1, 0.9), 1, 0, policy="greedy")


# -- entangled step ----------------------------------------------------------

def test_product_states_match_separable_loop(rng):
    spec = bell.make_chsh_env().action(3)
    for _ in range(10):
        ra, re = random_density(2, rng), DensityOperator(random_density(4, rng).matrix, (2, 2))
        joint = JointState(DensityOperator(np.kron(ra.matrix, re.matrix), (2, 4)))
        sep = ch.instrument_distribution(spec.payload, re)
        assert np.allclose(joint_outcome_distribution(joint, spec), sep, atol=1e-10)


def test_bell_example():
    meas = ActionSpec(0, "instrument", ch.basis_measurement(2), (1.0, 0.0))
    joint = JointState(bell_state("phi+").projector((2, 2)))
    assert np.allclose(joint_outcome_distribution(joint, meas), [0.5, 0.5])
    # draw until outcome 0 appears
    rng = np.random.default_rng(0)
    while True:
        percept, post = entangled_step(joint, meas, rng)
        if percept.outcome == 0:
            break
    ket00 = np.zeros((4, 4))
    ket00[0, 0] = 1.0
    assert np.allclose(post.rho.matrix, ket00, atol=1e-10)
    assert np.allclose(post.reduced_agent().matrix, np.diag([1.0, 0.0]), atol=1e-10)


def test_identity_instrument_leaves_joint_state():
    spec = ActionSpec(0, "instrument", ch.Instrument({0: ch.identity_channel(2)}), (0.0,))
    joint = JointState(bell_state("psi-").projector((2, 2)))
    assert np.allclose(joint_outcome_distribution(joint, spec), [1.0])
    _, post = entangled_step(joint, spec, np.random.default_rng(0))
    assert np.allclose(post.rho.matrix, joint.rho.matrix)


def test_joint_state_dims_checked():
    with pytest.raises(ValueError):
        JointState(DensityOperator(np.eye(2) / 2))
    spec = ActionSpec(0, "instrument", ch.basis_measurement(3), (0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        joint_outcome_distribution(JointState.product(DensityOperator(np.eye(2) / 2),
                                                      DensityOperator(np.eye(2) / 2)), spec)
