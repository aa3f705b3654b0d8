"""Classical Bayes-mixture agent used as a reference for diagonal classes.

Deliberately independent of the density-operator code: environments are
plain probability tables, sequence probabilities are summed over hidden
start states by brute force, and the planner is textbook expectimax over the
Bayes mixture xi(e_{1:t} || a_{1:t}) = sum_nu w_nu nu(e_{1:t} || a_{1:t}).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class IIDEnv:
    """probs[a][k]: outcome distribution of action a, fresh every cycle."""

    probs: tuple
    rewards: tuple

    def sequence_probability(self, actions: Sequence[int], outcomes: Sequence[int]) -> float:
        p = 1.0
        for a, k in zip(actions, outcomes):
            p *= self.probs[a][k]
        return p

    @property
    def n_outcomes(self) -> int:
        return len(self.probs[0])


@dataclass(frozen=True)
class MDPEnv:
    """trans[a][s][s'] with the new state observed; ``init`` is the hidden start distribution."""

    trans: tuple
    rewards: tuple
    init: tuple

    def sequence_probability(self, actions: Sequence[int], outcomes: Sequence[int]) -> float:
        total = 0.0
        for s0, p0 in enumerate(self.init):
            p, s = p0, s0
            for a, k in zip(actions, outcomes):
                p *= self.trans[a][s][k]
                s = k
            total += p
        return total

    @property
    def n_outcomes(self) -> int:
        return len(self.init)


def _tuplify(x):
    return tuple(_tuplify(v) for v in x) if isinstance(x, (list, tuple)) else float(x)


def iid_env(probs, rewards) -> IIDEnv:
    return IIDEnv(_tuplify(probs), _tuplify(rewards))


def mdp_env(trans, rewards, init=None) -> MDPEnv:
    n = len(trans[0])
    init = [1.0 / n] * n if init is None else init
    return MDPEnv(_tuplify(trans), _tuplify(rewards), _tuplify(init))


class ClassicalBayesAgent:
    """Bayes mixture over classical environments with prior 2**-bits and an
    expectimax planner.  All envs must share rewards[a][k]."""

    def __init__(self, envs, bits, horizon: int = 3, gamma: float = 0.9, tie_tol: float = 1e-10):
        self.envs = list(envs)
        z = sum(2.0 ** -b for b in bits)
        self.prior = [2.0 ** -b / z for b in bits]
        self.horizon = horizon
        self.gamma = gamma
        self.tie_tol = tie_tol
        self.n_actions = len(self.envs[0].rewards)
        self.n_outcomes = self.envs[0].n_outcomes
        self.rewards = self.envs[0].rewards

    def xi(self, history) -> float:
        acts = [a for a, _ in history]
        outs = [k for _, k in history]
        return sum(w * e.sequence_probability(acts, outs) for w, e in zip(self.prior, self.envs))

    def posterior(self, history) -> list[float]:
        acts = [a for a, _ in history]
        outs = [k for _, k in history]
        joint = [w * e.sequence_probability(acts, outs) for w, e in zip(self.prior, self.envs)]
        z = sum(joint)
        return [j / z for j in joint]

    def predictive(self, history, action: int) -> list[float]:
        base = self.xi(history)
        return [self.xi(list(history) + [(action, k)]) / base for k in range(self.n_outcomes)]

    def q_values(self, history, depth: int | None = None) -> list[float]:
        depth = self.horizon if depth is None else depth
        return [self._q(list(history), a, depth) for a in range(self.n_actions)]

    def _q(self, history, a, depth) -> float:
        base = self.xi(history)
        total = 0.0
        for k in range(self.n_outcomes):
            nxt = history + [(a, k)]
            p = self.xi(nxt) / base
            if p <= 1e-12:
                continue
            total += p * self.rewards[a][k]
            if depth > 1:
                total += self.gamma * p * max(self._q(nxt, b, depth - 1) for b in range(self.n_actions))
        return total

    def value(self, history, depth: int | None = None) -> float:
        return max(self.q_values(history, depth))

    def act(self, history) -> int:
        q = self.q_values(history)
        best = max(q)
        return min(a for a, v in enumerate(q) if v >= best - self.tie_tol)
