"""Bayesian mixtures over a finite class of environment hypotheses.

The mixture is kept in factorised form: a normalised weight per hypothesis
plus that hypothesis's own conditional environment state.  The (normalised)
mixture operator sum_Q w_Q rho_Q is rebuilt on demand.  Prior weights are
2**-bits, normalised over the class.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import channels as ch
from .core import DensityOperator, relative_entropy, trace_distance
from .environments import EnvironmentModel, transition
from .errors import ImpossibleObservationError

ZERO_PROB = ch.ZERO_PROB_CUTOFF


@dataclass(frozen=True, eq=False)
class MixtureState:
    hypotheses: tuple[EnvironmentModel, ...]
    weights: np.ndarray
    states: tuple[np.ndarray, ...]
    log_likelihoods: np.ndarray
    prior: np.ndarray = field(repr=False, default=None)

    @property
    def names(self) -> list[str]:
        return [h.name for h in self.hypotheses]

    @property
    def dim(self) -> int:
        return self.hypotheses[0].env_dim

    @property
    def action_ids(self) -> tuple[int, ...]:
        return self.hypotheses[0].action_ids

    @property
    def cond_states(self) -> tuple[DensityOperator, ...]:
        dims = self.hypotheses[0].initial_state.dims
        return tuple(DensityOperator(s, dims) for s in self.states)

    def action_spec(self, aid):
        return self.hypotheses[0].action(aid)

    def weight_of(self, name: str) -> float:
        return float(self.weights[self.names.index(name)])


def _check_interface(hyps: Sequence[EnvironmentModel]) -> None:
    first = hyps[0]
    for h in hyps[1:]:
        if h.env_dim != first.env_dim:
            raise ValueError(f"hypotheses disagree on dimension: {first.name}={first.env_dim}, "
                             f"{h.name}={h.env_dim}")
        if h.action_ids != first.action_ids:
            raise ValueError(f"hypotheses disagree on actions: {first.name} {first.action_ids}, "
                             f"{h.name} {h.action_ids}")
        for aid in first.action_ids:
            a, b = first.action(aid), h.action(aid)
            if a.kind != b.kind or a.outcomes != b.outcomes:
                raise ValueError(f"action {aid} differs in kind/outcomes between "
                                 f"{first.name} and {h.name}")


def prior_weights(bits: Sequence[int]) -> np.ndarray:
    b = np.asarray(bits, dtype=float)
    w = np.exp2(-(b - b.min()))
    return w / w.sum()


def mixture_init(hypotheses: Sequence[EnvironmentModel]) -> MixtureState:
    hyps = tuple(hypotheses)
    if not hyps:
        raise ValueError("the hypothesis class is empty")
    _check_interface(hyps)
    w = prior_weights([h.description_length for h in hyps])
    w.setflags(write=False)
    return MixtureState(hyps, w, tuple(h.initial_state.matrix for h in hyps),
                        np.zeros(len(hyps)), w)


def mixture_operator(mix: MixtureState) -> DensityOperator:
    m = sum(w * s for w, s in zip(mix.weights, mix.states) if w > 0)
    return DensityOperator.trusted(m, mix.hypotheses[0].initial_state.dims)


def outcome_table(mix: MixtureState, aid) -> np.ndarray:
    """Per-hypothesis outcome probabilities, shape (n_hypotheses, n_outcomes)."""
    spec = mix.action_spec(aid)
    if not spec.is_instrument:
        raise ValueError(f"action {aid} is unitary and has no outcome distribution")
    return np.array([ch.instrument_distribution(h.action(aid).payload, s)
                     for h, s in zip(mix.hypotheses, mix.states)])


def predictive_distribution(mix: MixtureState, aid) -> np.ndarray:
    """sum_Q w_Q Pr_Q(k | state_Q, aid), indexed like the action's outcomes."""
    return mix.weights @ outcome_table(mix, aid)


def mixture_update(mix: MixtureState, aid, outcome=None) -> MixtureState:
    """Condition every hypothesis on ``outcome`` of action ``aid``.

    Hypotheses that gave the outcome probability <= 1e-12 are eliminated:
    weight exactly 0, state frozen.  Unitary actions leave the weights alone.
    """
    spec = mix.action_spec(aid)
    n = len(mix.hypotheses)
    lik = np.zeros(n)
    states = list(mix.states)
    for i, (h, s) in enumerate(zip(mix.hypotheses, mix.states)):
        if mix.weights[i] == 0.0:
            continue
        p, post = transition(h, s, aid, outcome)
        if post is None:
            continue
        lik[i] = p
        states[i] = post
    if not spec.is_instrument:
        return MixtureState(mix.hypotheses, mix.weights, tuple(states), mix.log_likelihoods, mix.prior)
    lik[lik <= ZERO_PROB] = 0.0
    unnorm = mix.weights * lik
    total = unnorm.sum()
    if total <= ZERO_PROB:
        raise ImpossibleObservationError(
            f"outcome {outcome!r} of action {aid} has predictive probability {total:.3g} "
            f"under every hypothesis in {mix.names}")
    w = unnorm / total
    w.setflags(write=False)
    with np.errstate(divide="ignore"):
        ll = mix.log_likelihoods + np.log(lik)
    return MixtureState(mix.hypotheses, w, tuple(states), ll, mix.prior)


def posterior_divergence(mix: MixtureState, truth_state) -> float:
    """D(truth || mixture operator) in nats; ``inf`` outside the support."""
    return relative_entropy(truth_state, mixture_operator(mix))


def posterior_trace_distance(mix: MixtureState, truth_state) -> float:
    return trace_distance(truth_state, mixture_operator(mix))


@dataclass(frozen=True)
class GapStatistics:
    """Complexity gap and the initial-divergence bounds derived from it.

    ``d0_bound`` is the complexity-plus-dilution form bits* ln 2 + ln(1+g);
    ``d0_dilution`` is ln(1+g), obtained when the true model's weight is the
    normalised prior share 1/(1+g).
    """

    g: float
    d0_bound: float
    d0_dilution: float
    true_bits: int

    def bound_curve(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.d0_bound / t


def complexity_gap(bits: Sequence[int], true_index: int) -> float:
    b = list(bits)
    return math.fsum(2.0 ** -(b[i] - b[true_index]) for i in range(len(b)) if i != true_index)


def gap_statistics(hypotheses: Sequence[EnvironmentModel], true_index: int) -> GapStatistics:
    bits = [h.description_length for h in hypotheses]
    if not 0 <= true_index < len(bits):
        raise ValueError(f"true index {true_index} outside class of size {len(bits)}")
    g = complexity_gap(bits, true_index)
    star = bits[true_index]
    return GapStatistics(g, star * math.log(2) + math.log1p(g), math.log1p(g), star)


def fisher_information(instr: ch.Instrument, rho, eps: float = 1e-6) -> np.ndarray:
    """Classical Fisher information of the instrument's outcome distribution
    with respect to a local Hermitian-basis parametrisation of the state.

    Its rank is a numerical diagnostic for informational completeness: a
    full-rank matrix (rank d^2 - 1) means every state direction is visible
    in the outcome statistics.
    """
    m = np.asarray(rho, dtype=complex)
    d = m.shape[0]
    basis = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            if i == j:
                if i == d - 1:
                    continue
                e[i, i], e[d - 1, d - 1] = 1, -1
            elif i < j:
                e[i, j] = e[j, i] = 1
            else:
                e[i, j], e[j, i] = 1j, -1j
            basis.append(e)
    p0 = ch.instrument_distribution(instr, m)
    grads = np.array([(ch.instrument_distribution(instr, m + eps * e)
                       - ch.instrument_distribution(instr, m - eps * e)) / (2 * eps) for e in basis])
    support = p0 > 1e-12
    return (grads[:, support] / p0[support]) @ grads[:, support].T
