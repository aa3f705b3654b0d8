import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qaixi import channels as ch
from qaixi.classical import ClassicalBayesAgent, iid_env
from qaixi.core import DensityOperator, random_density
from qaixi.environments import ActionSpec, EnvironmentModel, make_classical_env
from qaixi.errors import ImpossibleObservationError
from qaixi.induction import (
    complexity_gap,
    fisher_information,
    gap_statistics,
    mixture_init,
    mixture_operator,
    mixture_update,
    posterior_divergence,
    posterior_trace_distance,
    predictive_distribution,
    prior_weights,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)


def coin(p, bits=1, name=None):
    return make_classical_env([[p, 1 - p]], [[1.0, 0.0]], bits, name or f"c{p}")


def test_prior_weights():
    assert np.allclose(prior_weights([1, 1]), [0.5, 0.5])
    assert np.allclose(prior_weights([1, 2, 3]), [4 / 7, 2 / 7, 1 / 7], atol=1e-15)
    assert np.allclose(prior_weights([5]), [1.0])


def test_mixture_operator_examples():
    mix = mixture_init([coin(1.0, name="up"), coin(0.0, name="down")])
    assert np.allclose(mixture_operator(mix).matrix, np.eye(2) / 2)
    single = mixture_init([coin(0.3)])
    assert np.allclose(mixture_operator(single).matrix, np.diag([0.3, 0.7]))
    three = mixture_init([coin(0.2, 1), coin(0.5, 2), coin(0.9, 3)])
    w = np.array([4, 2, 1]) / 7
    ref = w[0] * np.diag([0.2, 0.8]) + w[1] * np.diag([0.5, 0.5]) + w[2] * np.diag([0.9, 0.1])
    assert np.allclose(mixture_operator(three).matrix, ref, atol=1e-15)


def test_predictive_and_update_two_coins():
    mix = mixture_init([coin(0.9), coin(0.1)])
    assert np.allclose(predictive_distribution(mix, 0), [0.5, 0.5])
    after = mixture_update(mix, 0, 0)
    assert np.allclose(after.weights, [0.9, 0.1], atol=1e-15)
    assert predictive_distribution(after, 0)[0] == pytest.approx(0.82, abs=1e-15)


def test_single_hypothesis_predicts_born_distribution():
    mix = mixture_init([coin(0.37)])
    assert np.allclose(predictive_distribution(mix, 0), [0.37, 0.63])


def test_elimination_is_exact():
    mix = mixture_init([coin(1.0, name="sure"), coin(0.5, name="fair")])
    after = mixture_update(mix, 0, 1)
    assert after.weights[0] == 0.0
    assert after.weights[1] == 1.0
    again = mixture_update(after, 0, 0)
    assert again.weights[0] == 0.0


def test_impossible_observation():
    mix = mixture_init([coin(1.0, name="a"), coin(1.0, name="b")])
    with pytest.raises(ImpossibleObservationError):
        mixture_update(mix, 0, 1)


def flip_env(bits, p_first):
    acts = {0: ActionSpec(0, "unitary", ch.UnitaryAction(X)),
            1: ActionSpec(1, "instrument", ch.basis_measurement(2), (1.0, 0.0))}
    return EnvironmentModel(f"f{p_first}", DensityOperator(np.diag([p_first, 1 - p_first])), acts, bits)


def test_unitary_action_keeps_weights_and_evolves_states():
    mix = mixture_init([flip_env(1, 0.8), flip_env(2, 0.3)])
    after = mixture_update(mix, 0)
    assert np.array_equal(after.weights, mix.weights)
    assert np.allclose(after.states[0], np.diag([0.2, 0.8]))
    assert np.allclose(after.states[1], np.diag([0.7, 0.3]))
    with pytest.raises(ValueError, match="unitary"):
        predictive_distribution(mix, 0)


def test_update_does_not_mutate():
    mix = mixture_init([coin(0.9), coin(0.1)])
    before = mix.weights.copy()
    mixture_update(mix, 0, 1)
    assert np.array_equal(mix.weights, before)
    with pytest.raises(ValueError):
        mix.weights[0] = 0.3


@given(st.lists(st.integers(0, 1), max_size=12),
       st.lists(st.floats(0.05, 0.95), min_size=2, max_size=4),
       st.lists(st.integers(0, 4), min_size=4, max_size=4))
def test_posterior_matches_classical_bayes(outcomes, biases, bits):
    bits = bits[:len(biases)]
    hyps = [coin(p, b, f"h{i}") for i, (p, b) in enumerate(zip(biases, bits))]
    ref = ClassicalBayesAgent([iid_env([[p, 1 - p]], [[1.0, 0.0]]) for p in biases], bits)
    mix = mixture_init(hyps)
    for k in outcomes:
        mix = mixture_update(mix, 0, k)
    hist = [(0, k) for k in outcomes]
    assert np.allclose(mix.weights, ref.posterior(hist), atol=1e-12)
    assert np.allclose(predictive_distribution(mix, 0), ref.predictive(hist, 0), atol=1e-12)
    assert mix.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_divergence_examples():
    mix = mixture_init([coin(0.4)])
    assert posterior_divergence(mix, np.diag([0.4, 0.6])) == pytest.approx(0.0, abs=1e-14)
    half = mixture_init([coin(0.5)])
    assert posterior_divergence(half, np.diag([1.0, 0.0])) == pytest.approx(math.log(2), abs=1e-14)
    sure = mixture_init([coin(1.0)])
    assert posterior_divergence(sure, np.diag([0.0, 1.0])) == math.inf
    assert posterior_trace_distance(sure, np.diag([0.0, 1.0])) == pytest.approx(1.0)


def test_interface_mismatch_rejected():
    with pytest.raises(ValueError, match="dimension"):
        mixture_init([coin(0.5), make_classical_env([[0.2, 0.3, 0.5]], [[1, 0, 0]], 1)])
    with pytest.raises(ValueError, match="empty"):
        mixture_init([])


# -- complexity gap ----------------------------------------------------------

def test_gap_statistics_examples():
    g = gap_statistics([coin(0.5, 0)], 0)
    assert (g.g, g.d0_bound) == (0.0, 0.0)
    g = gap_statistics([coin(0.5, 1), coin(0.4, 1)], 0)
    assert g.g == 1.0
    assert g.d0_bound == pytest.approx(2 * math.log(2), abs=1e-15)
    g = gap_statistics([coin(0.5, 0), coin(0.4, 3)], 0)
    assert g.g == 0.125
    assert g.d0_bound == pytest.approx(math.log(9 / 8), abs=1e-15)
    assert g.d0_dilution == pytest.approx(math.log(9 / 8), abs=1e-15)


def test_dilution_term_equals_initial_divergence_of_weight():
    # ln(1+g) is -ln of the truth's normalised prior share
    bits = [1, 2, 3, 3]
    for ti in range(4):
        share = prior_weights(bits)[ti]
        assert math.log1p(complexity_gap(bits, ti)) == pytest.approx(-math.log(share), abs=1e-14)


def test_gap_bad_index():
    with pytest.raises(ValueError):
        gap_statistics([coin(0.5)], 3)


# -- informational completeness diagnostic -----------------------------------

def test_fisher_rank():
    rho = np.array([[0.6, 0.1], [0.1, 0.4]], dtype=complex)
    assert np.linalg.matrix_rank(fisher_information(ch.basis_measurement(2), rho), tol=1e-6) == 1
    # tetrahedral POVM is informationally complete on a qubit
    paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    dirs = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
    effects = [(np.eye(2) + sum(n * p for n, p in zip(d, paulis))) / 4 for d in dirs]
    fi = fisher_information(ch.povm_instrument(effects), rho)
    assert np.linalg.matrix_rank(fi, tol=1e-6) == 3


def test_factorised_predictive_equals_mixture_operator_born_rule(rng):
    """With a shared instrument, sum_Q w_Q Tr[E_k(rho_Q)] = Tr[E_k(sum_Q w_Q rho_Q)]."""
    instr = ch.random_instrument(3, 3, rng)
    hyps = [EnvironmentModel(f"h{i}", random_density(3, rng),
                             {0: ActionSpec(0, "instrument", instr, (1.0, 0.5, 0.0))}, i + 1)
            for i in range(4)]
    mix = mixture_init(hyps)
    for k in (0, 2, 1, 1):
        direct = ch.instrument_distribution(instr, mixture_operator(mix))
        assert np.allclose(predictive_distribution(mix, 0), direct, atol=1e-12)
        mix = mixture_update(mix, 0, k)
