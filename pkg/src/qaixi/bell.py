"""CHSH game environments.

Every environment here shares one interface: four actions, one per setting
pair ``(x, y)`` with id ``2*x + y``, and four outcomes ``k = 2*i + j``
where ``i`` (``j``) is 0 when Alice (Bob) reads +1 and 1 when she (he)
reads -1.  Reward is 1 when ``o_A * o_B == (-1)**(x*y)``.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .channels import Instrument, KrausChannel, instrument_distribution
from .core import DensityOperator, bell_state
from .environments import EPISODIC, ActionSpec, EnvironmentModel

SETTINGS = [(0, 0), (0, 1), (1, 0), (1, 1)]
SIGNS = (1, -1)

# Measurement directions in the real (x-z) plane of each qubit, as the angle
# theta of the +1 eigenvector cos(theta)|0> + sin(theta)|1>.  Order: A0, A1, B0, B1.
OPTIMAL_ANGLES = {
    "phi+": (0.0, np.pi / 4, np.pi / 8, -np.pi / 8),
    "psi-": (0.0, np.pi / 4, 5 * np.pi / 8, 3 * np.pi / 8),
}


def outcome_index(o_a: int, o_b: int) -> int:
    return 2 * SIGNS.index(o_a) + SIGNS.index(o_b)


def outcome_signs(k: int) -> tuple[int, int]:
    return SIGNS[k // 2], SIGNS[k % 2]


def wins(x: int, y: int, o_a: int, o_b: int) -> bool:
    return o_a * o_b == (-1) ** (x * y)


def chsh_rewards(x: int, y: int) -> tuple[float, ...]:
    return tuple(float(wins(x, y, *outcome_signs(k))) for k in range(4))


def qubit_projectors(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Projectors for outcomes +1 and -1 of the measurement along ``theta``."""
    plus = np.array([np.cos(theta), np.sin(theta)], dtype=complex)
    minus = np.array([-np.sin(theta), np.cos(theta)], dtype=complex)
    return np.outer(plus, plus.conj()), np.outer(minus, minus.conj())


def make_chsh_env(angles=None, state: str = "psi-", description_length: int = 3,
                  name: str = "chsh_quantum") -> EnvironmentModel:
    """Bell pair re-prepared every round, measured with product projectors.

    ``angles`` = (A0, A1, B0, B1); defaults to the optimal settings for
    ``state`` (``"psi-"`` or ``"phi+"``).
    """
    state = state.lower()
    if angles is None:
        if state not in OPTIMAL_ANGLES:
            raise ValueError(f"no default angles for state {state!r}")
        angles = OPTIMAL_ANGLES[state]
    a_angles, b_angles = angles[:2], angles[2:]
    rho = bell_state(state).projector(dims=(2, 2))
    actions = {}
    for x, y in SETTINGS:
        pa, pb = qubit_projectors(a_angles[x]), qubit_projectors(b_angles[y])
        branches = {outcome_index(oa, ob): KrausChannel((np.kron(pa[SIGNS.index(oa)], pb[SIGNS.index(ob)]),))
                    for oa in SIGNS for ob in SIGNS}
        branches = dict(sorted(branches.items()))
        aid = 2 * x + y
        actions[aid] = ActionSpec(aid, "instrument", Instrument(branches), chsh_rewards(x, y),
                                  f"settings x={x} y={y}")
    return EnvironmentModel(name, rho, actions, description_length, EPISODIC)


def make_lhv_env(hidden_probs, alice_plus, bob_plus, description_length: int = 1,
                 name: str = "chsh_lhv") -> EnvironmentModel:
    """Local hidden-variable model on the CHSH interface.

    The hidden variable ``lam`` takes four values and is drawn each round
    from ``hidden_probs``; it is stored as ``diag(hidden_probs)``.  Alice
    outputs +1 with probability ``alice_plus[lam][x]`` and Bob with
    ``bob_plus[lam][y]``, independently given ``lam``.
    """
    h = np.asarray(hidden_probs, dtype=float)
    pa = np.asarray(alice_plus, dtype=float)
    pb = np.asarray(bob_plus, dtype=float)
    if h.shape != (4,) or pa.shape != (4, 2) or pb.shape != (4, 2):
        raise ValueError("need 4 hidden values and (4, 2) response tables")
    if abs(h.sum() - 1) > 1e-9 or np.any(h < 0):
        raise ValueError("hidden_probs must be a probability vector")
    if np.any((pa < 0) | (pa > 1) | (pb < 0) | (pb > 1)):
        raise ValueError("response probabilities must lie in [0, 1]")
    basis = np.eye(4)
    actions = {}
    for x, y in SETTINGS:
        branches = {}
        for k in range(4):
            oa, ob = outcome_signs(k)
            ops = []
            for lam in range(4):
                qa = pa[lam, x] if oa == 1 else 1 - pa[lam, x]
                qb = pb[lam, y] if ob == 1 else 1 - pb[lam, y]
                if qa * qb > 0:
                    ops.append(np.sqrt(qa * qb) * np.outer(basis[lam], basis[lam]))
            branches[k] = KrausChannel(tuple(ops) or (np.zeros((4, 4)),))
        aid = 2 * x + y
        actions[aid] = ActionSpec(aid, "instrument", Instrument(branches), chsh_rewards(x, y),
                                  f"settings x={x} y={y}")
    rho = DensityOperator(np.diag(h).astype(complex), (2, 2))
    return EnvironmentModel(name, rho, actions, description_length, EPISODIC)


def deterministic_strategies():
    """All 16 local deterministic strategies (a0, a1, b0, b1) with entries +-1."""
    return list(itertools.product(SIGNS, repeat=4))


def strategy_win_probability(strategy) -> Fraction:
    """Exact win rate of a deterministic strategy over uniformly random settings."""
    a0, a1, b0, b1 = strategy
    a, b = (a0, a1), (b0, b1)
    won = sum(wins(x, y, a[x], b[y]) for x, y in SETTINGS)
    return Fraction(won, 4)


def lhv_max_win() -> Fraction:
    """Best classical CHSH win rate by exhaustion over deterministic strategies."""
    return max(strategy_win_probability(s) for s in deterministic_strategies())


def make_best_lhv_env(description_length: int = 2, name: str = "chsh_lhv_best") -> EnvironmentModel:
    """Uniform mixture of four deterministic strategies, each losing at a
    different setting pair, so every setting is won with probability 3/4."""
    chosen = []
    for x, y in SETTINGS:
        for s in deterministic_strategies():
            a, b = s[:2], s[2:]
            lost = [(u, v) for u, v in SETTINGS if not wins(u, v, a[u], b[v])]
            if lost == [(x, y)]:
                chosen.append(s)
                break
    pa = [[(s[0] + 1) / 2, (s[1] + 1) / 2] for s in chosen]
    pb = [[(s[2] + 1) / 2, (s[3] + 1) / 2] for s in chosen]
    return make_lhv_env(np.full(4, 0.25), pa, pb, description_length, name)


def make_uniform_lhv_env(description_length: int = 1, name: str = "chsh_lhv_uniform") -> EnvironmentModel:
    """Both parties output fair coin flips."""
    half = np.full((4, 2), 0.5)
    return make_lhv_env(np.full(4, 0.25), half, half, description_length, name)


def win_probability(env: EnvironmentModel, state=None) -> float:
    """Exact expected reward per round with settings drawn uniformly."""
    rho = env.initial_state.matrix if state is None else np.asarray(state)
    total = 0.0
    for aid in range(4):
        spec = env.action(aid)
        total += float(instrument_distribution(spec.payload, rho) @ np.array(spec.rewards)) / 4
    return total
