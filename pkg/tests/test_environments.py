import itertools
import json

import numpy as np
import pytest

from qaixi import channels as ch
from qaixi.builtin import MDP_REWARDS, MDP_TABLES
from qaixi.classical import mdp_env
from qaixi.core import DensityOperator
from qaixi.environments import (
    EPISODIC,
    ActionSpec,
    EnvironmentInstance,
    EnvironmentModel,
    env_step,
    environment_from_json,
    environment_to_json,
    load_class,
    make_classical_env,
    sample_index,
    transition,
)
from qaixi.errors import ConfigError

X = np.array([[0, 1], [1, 0]], dtype=complex)


def flip_then_measure_env():
    acts = {0: ActionSpec(0, "unitary", ch.UnitaryAction(X), label="flip"),
            1: ActionSpec(1, "instrument", ch.basis_measurement(2), (1.0, 0.0), "measure")}
    return EnvironmentModel("flip", DensityOperator(np.diag([1.0, 0.0])), acts, 1)


def test_deterministic_prepared_state(rng):
    env = make_classical_env([[0.0, 1.0]], [[0.0, 1.0]], 0, "det")
    for _ in range(20):
        percept, _ = env_step(env, env.initial_state, 0, rng)
        assert percept.outcome == 1 and percept.reward == 1.0


def test_unitary_then_measure(rng):
    env = flip_then_measure_env()
    percept, state = env_step(env, env.initial_state, 0, rng)
    assert percept.outcome is None and percept.reward == 0.0
    p, _ = transition(env, state.matrix, 1, 1)
    assert p == pytest.approx(1.0)
    percept, _ = env_step(env, state, 1, rng)
    assert percept.outcome == 1


def test_biased_coin_frequency():
    env = make_classical_env([[0.9, 0.1]], [[1.0, 0.0]], 1, "coin")
    inst = EnvironmentInstance(env, np.random.default_rng(12345))
    heads = sum(inst.step(0).outcome == 0 for _ in range(10_000))
    assert abs(heads / 10_000 - 0.9) <= 0.02


def test_coin_embedding_is_diagonal():
    env = make_classical_env([[0.9, 0.1]], [[1.0, 0.0]], 1, "coin")
    assert np.allclose(env.initial_state.matrix, np.diag([0.9, 0.1]))
    assert env.mode == EPISODIC
    fair = make_classical_env([[0.5, 0.5]], [[1.0, 0.0]], 1, "fair")
    state = fair.initial_state
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert np.allclose(ch.instrument_distribution(fair.action(0).payload, state), [0.5, 0.5])
        _, state = env_step(fair, state, 0, rng)


def test_action_dependent_iid_source():
    env = make_classical_env([[0.2, 0.8], [0.7, 0.3]], [[1, 0], [1, 0]], 1, "arms")
    for a, row in enumerate([[0.2, 0.8], [0.7, 0.3]]):
        dist = ch.instrument_distribution(env.action(a).payload, env.initial_state)
        assert np.allclose(dist, row)


def quantum_sequence_probability(env, actions, outcomes):
    state, p = env.initial_state.matrix, 1.0
    for a, k in zip(actions, outcomes):
        q, state = transition(env, state, a, k)
        if state is None:
            return 0.0
        p *= q
    return p


@pytest.mark.parametrize("name", sorted(MDP_TABLES))
def test_mdp_trajectories_match_classical_chain(name):
    env = make_classical_env(MDP_TABLES[name], MDP_REWARDS, 1, name)
    ref = mdp_env(MDP_TABLES[name], MDP_REWARDS)
    for n in range(1, 6):
        for acts in itertools.product(range(2), repeat=n):
            total = 0.0
            for outs in itertools.product(range(2), repeat=n):
                q = quantum_sequence_probability(env, acts, outs)
                assert q == pytest.approx(ref.sequence_probability(acts, outs), abs=1e-12)
                total += q
            assert total == pytest.approx(1.0, abs=1e-12)


def test_sample_index_never_draws_zero_branch():
    rng = np.random.default_rng(3)
    probs = np.array([0.0, 0.4, 0.0, 0.6, 0.0])
    draws = {sample_index(probs, rng) for _ in range(2000)}
    assert draws == {1, 3}


def test_same_seed_same_percepts():
    env = make_classical_env([[0.3, 0.7]], [[1.0, 0.0]], 1, "coin")

    def run(seed):
        inst = EnvironmentInstance(env, np.random.default_rng(seed))
        return [inst.step(0).outcome for _ in range(200)]

    assert run(5) == run(5)
    assert run(5) != run(6)


# -- validation and JSON -----------------------------------------------------

def test_model_rejects_bad_definitions():
    meas = ch.basis_measurement(2)
    rho = DensityOperator(np.eye(2) / 2)
    with pytest.raises(ValueError, match="one reward per outcome"):
        EnvironmentModel("e", rho, {0: ActionSpec(0, "instrument", meas, (1.0,))})
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        EnvironmentModel("e", rho, {0: ActionSpec(0, "instrument", meas, (2.0, 0.0))})
    broken = ch.Instrument({0: ch.KrausChannel((np.diag([1.0, 0.0]),))})
    with pytest.raises(ValueError, match="invalid"):
        EnvironmentModel("e", rho, {0: ActionSpec(0, "instrument", broken, (1.0,))})
    with pytest.raises(ValueError, match="dimension"):
        EnvironmentModel("e", DensityOperator(np.eye(3) / 3), {0: ActionSpec(0, "instrument", meas, (1, 0))})


def test_unknown_action():
    with pytest.raises(ValueError, match="unknown action"):
        flip_then_measure_env().action(9)


def test_json_round_trip(tmp_path):
    env = flip_then_measure_env()
    data = environment_to_json(env)
    back = environment_from_json(json.loads(json.dumps(data)))
    assert environment_to_json(back) == data
    assert back.action(0).context == env.action(0).context


def test_json_errors(tmp_path):
    data = environment_to_json(flip_then_measure_env())
    data["actions"][1]["rewards"] = [1.0]
    with pytest.raises(ConfigError):
        environment_from_json(data)
    with pytest.raises(ConfigError):
        load_class(tmp_path)
    (tmp_path / "a.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_class(tmp_path)
