"""Planning and acting: exact finite-horizon expectimax over the mixture,
the separable interaction loop, and the entangled (agent ⊗ environment)
measurement step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import channels as ch
from .core import DensityOperator, partial_trace, tensor
from .environments import (
    ActionSpec,
    EnvironmentInstance,
    EnvironmentModel,
    History,
    Percept,
    sample_index,
    transition,
)
from .errors import CapacityError
from .induction import (
    MixtureState,
    mixture_update,
    outcome_table,
    posterior_divergence,
    posterior_trace_distance,
)

MAX_HORIZON = 6
MAX_TREE = 10**7
TIE_TOL = 1e-10


@dataclass(frozen=True)
class PlanningConfig:
    horizon: int = 3
    gamma: float = 0.9
    tie_tol: float = TIE_TOL

    def __post_init__(self):
        if not 1 <= self.horizon <= MAX_HORIZON:
            raise ValueError(f"horizon must be in 1..{MAX_HORIZON}, got {self.horizon}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.gamma}")

    def check_branching(self, n_actions: int, n_outcomes: int) -> None:
        size = (n_actions * max(n_outcomes, 1)) ** self.horizon
        if size > MAX_TREE:
            raise CapacityError(f"planning tree ({n_actions} actions x {n_outcomes} outcomes)^"
                                f"{self.horizon} = {size} exceeds {MAX_TREE}")


def _branching(mix: MixtureState) -> tuple[int, int]:
    n_out = max((len(mix.action_spec(a).outcomes) for a in mix.action_ids), default=1)
    return len(mix.action_ids), n_out


def _argmax(q: dict[int, float], tol: float) -> int:
    best = max(q.values())
    return min(a for a, v in q.items() if v >= best - tol)


def _q_values(mix: MixtureState, gamma: float, depth: int) -> dict[int, float]:
    q = {}
    for aid in mix.action_ids:
        spec = mix.action_spec(aid)
        if not spec.is_instrument:
            nxt = mixture_update(mix, aid)
            q[aid] = gamma * _value(nxt, gamma, depth - 1)
            continue
        table = outcome_table(mix, aid)                  # (n_hyp, n_out)
        rewards = np.array([h.action(aid).rewards for h in mix.hypotheses])
        joint = mix.weights[:, None] * table
        pred = joint.sum(axis=0)
        total = 0.0
        for i, k in enumerate(spec.outcomes):
            if pred[i] <= ch.ZERO_PROB_CUTOFF:
                continue
            total += float(joint[:, i] @ rewards[:, i])
            if depth > 1:
                total += gamma * pred[i] * _value(mixture_update(mix, aid, k), gamma, depth - 1)
        q[aid] = total
    return q


def _value(mix: MixtureState, gamma: float, depth: int) -> float:
    if depth <= 0:
        return 0.0
    return max(_q_values(mix, gamma, depth).values())


def q_values(mix: MixtureState, cfg: PlanningConfig, depth: int | None = None) -> dict[int, float]:
    """Expected discounted return of each first action, optimal thereafter."""
    depth = cfg.horizon if depth is None else depth
    if not 0 <= depth <= cfg.horizon:
        raise ValueError(f"depth {depth} outside 0..{cfg.horizon}")
    cfg.check_branching(*_branching(mix))
    if depth == 0:
        return {a: 0.0 for a in mix.action_ids}
    return _q_values(mix, cfg.gamma, depth)


def value(mix: MixtureState, cfg: PlanningConfig, depth: int | None = None) -> float:
    """Exact expectimax value of the mixture with ``depth`` cycles remaining.

    V(d) = max_a sum_k p(k|a) [r(a,k) + gamma V_k(d-1)], where p is the
    mixture predictive distribution and V_k is evaluated on the mixture
    conditioned on (a, k).  When hypotheses disagree on rewards the
    immediate term is the posterior expectation sum_Q w_Q p_Q(k) r_Q(a,k).
    """
    depth = cfg.horizon if depth is None else depth
    if depth == 0:
        return 0.0
    return max(q_values(mix, cfg, depth).values())


def qaixi_policy(mix: MixtureState, cfg: PlanningConfig) -> int:
    """Action maximising the expectimax objective; ties go to the lowest id."""
    return _argmax(q_values(mix, cfg), cfg.tie_tol)


def policy_value_under(truth: EnvironmentModel, truth_state, mix: MixtureState,
                       cfg: PlanningConfig, depth: int | None = None) -> float:
    """Expected discounted return when the planning agent acts against ``truth``.

    The agent re-plans at every node with its remaining depth and updates
    its mixture on each outcome; the expectation is over ``truth``'s own
    outcome probabilities.  This is the return the policy actually earns,
    as opposed to :func:`value`, the return it expects under its beliefs.
    """
    depth = cfg.horizon if depth is None else depth
    if depth <= 0:
        return 0.0
    state = np.asarray(getattr(truth_state, "matrix", truth_state), dtype=complex)
    aid = _argmax(q_values(mix, cfg, depth), cfg.tie_tol)
    spec = truth.action(aid)
    if not spec.is_instrument:
        _, nxt = transition(truth, state, aid, None)
        return cfg.gamma * policy_value_under(truth, nxt, mixture_update(mix, aid), cfg, depth - 1)
    total = 0.0
    for k in spec.outcomes:
        p, nxt = transition(truth, state, aid, k)
        if nxt is None:
            continue
        total += p * spec.reward(k)
        if depth > 1:
            total += cfg.gamma * p * policy_value_under(truth, nxt, mixture_update(mix, aid, k),
                                                        cfg, depth - 1)
    return total


# -- interaction loop --------------------------------------------------------

@dataclass
class AgentState:
    """Agent register, belief mixture, and the map applied to the register
    after each cycle (identity when ``internal_update`` is None)."""

    mixture: MixtureState
    internal_state: DensityOperator = field(default_factory=lambda: DensityOperator(np.eye(1)))
    internal_update: ch.KrausChannel | None = None

    def refresh(self) -> None:
        if self.internal_update is not None:
            self.internal_state = ch.apply_channel(self.internal_update, self.internal_state)


def decohering_update(dim: int, strength: float = 1.0) -> ch.KrausChannel:
    """Internal update that dephases the agent register in its computational basis."""
    return ch.dephasing_channel(dim, strength)


@dataclass
class EpisodeTrace:
    """Per-cycle diagnostics; index 0 is before the first action."""

    divergence: np.ndarray
    trace_distance: np.ndarray
    rewards: np.ndarray
    weights: np.ndarray
    names: list[str]


Policy = Callable[[MixtureState, np.random.Generator], int]


def random_instrument_policy(mix: MixtureState, rng: np.random.Generator) -> int:
    """Uniformly random choice among instrument actions."""
    acts = [a for a in mix.action_ids if mix.action_spec(a).is_instrument]
    return acts[int(rng.integers(len(acts)))]


def run_episode(truth: EnvironmentModel, agent: AgentState, cfg: PlanningConfig, cycles: int,
                seed, policy: str | Policy = "qaixi") -> tuple[History, EpisodeTrace]:
    """Let the agent interact with ``truth`` for ``cycles`` steps.

    ``policy`` is ``"qaixi"``, ``"random"`` (uniform over instrument
    actions) or a callable ``(mixture, rng) -> action``.  ``seed`` is an int
    or a ``numpy.random.SeedSequence``; the environment and the policy draw
    from separate child streams.  ``agent`` is updated in place.
    """
    if cycles < 0:
        raise ValueError("cycles must be non-negative")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    env_ss, pol_ss = ss.spawn(2)
    env = EnvironmentInstance(truth, np.random.default_rng(env_ss))
    pol_rng = np.random.default_rng(pol_ss)
    if policy == "qaixi":
        choose = lambda m, _r: qaixi_policy(m, cfg)  # noqa: E731
    elif policy == "random":
        choose = random_instrument_policy
    elif callable(policy):
        choose = policy
    else:
        raise ValueError(f"unknown policy {policy!r}")

    hist = History()
    n = len(agent.mixture.hypotheses)
    div = np.empty(cycles + 1)
    td = np.empty(cycles + 1)
    rew = np.empty(cycles)
    wts = np.empty((cycles + 1, n))

    def record(t):
        rho = env.true_state()
        div[t] = posterior_divergence(agent.mixture, rho)
        td[t] = posterior_trace_distance(agent.mixture, rho)
        wts[t] = agent.mixture.weights

    record(0)
    for t in range(1, cycles + 1):
        aid = choose(agent.mixture, pol_rng)
        spec = truth.action(aid)
        percept = env.step(aid)
        hist.append(aid, spec.context, percept)
        agent.mixture = mixture_update(agent.mixture, aid, percept.outcome)
        agent.refresh()
        rew[t - 1] = percept.reward
        record(t)
    return hist, EpisodeTrace(div, td, rew, wts, agent.mixture.names)


# -- entangled loop ----------------------------------------------------------

@dataclass(frozen=True)
class JointState:
    rho: DensityOperator
    separable_hint: bool = False

    def __post_init__(self):
        if len(self.rho.dims) != 2:
            raise ValueError(f"joint state needs dims [dim_A, dim_E], got {self.rho.dims}")

    @property
    def dim_a(self) -> int:
        return self.rho.dims[0]

    @property
    def dim_e(self) -> int:
        return self.rho.dims[1]

    @classmethod
    def product(cls, rho_a: DensityOperator, rho_e: DensityOperator) -> "JointState":
        return cls(tensor(rho_a, rho_e), separable_hint=True)

    def reduced_agent(self) -> DensityOperator:
        return partial_trace(self.rho, [0])

    def reduced_env(self) -> DensityOperator:
        return partial_trace(self.rho, [1])


def _lift(spec: ActionSpec, dim_a: int):
    """Extend an environment action to id_A ⊗ action."""
    eye = np.eye(dim_a)
    if not spec.is_instrument:
        return np.kron(eye, spec.payload.matrix)
    return ch.Instrument({k: ch.KrausChannel(tuple(np.kron(eye, m) for m in c.kraus_ops))
                          for k, c in spec.payload.branches.items()})


def joint_outcome_distribution(joint: JointState, spec: ActionSpec) -> np.ndarray:
    """Tr[(id_A ⊗ E_k) rho_AE] for every outcome of ``spec``."""
    if spec.dim != joint.dim_e:
        raise ValueError(f"action acts on dimension {spec.dim}, environment factor is {joint.dim_e}")
    if not spec.is_instrument:
        raise ValueError("unitary actions have no outcomes")
    return ch.instrument_distribution(_lift(spec, joint.dim_a), joint.rho.matrix)


def entangled_step(joint: JointState, spec: ActionSpec,
                   rng: np.random.Generator) -> tuple[Percept, JointState]:
    """Apply an environment action to the joint agent/environment state.

    Instruments draw ``k`` with probability Tr[(id ⊗ E_k) rho_AE] (zero
    branches are never drawn) and return (id ⊗ E_k)(rho_AE) / Pr(k).
    """
    if spec.dim != joint.dim_e:
        raise ValueError(f"action acts on dimension {spec.dim}, environment factor is {joint.dim_e}")
    lifted = _lift(spec, joint.dim_a)
    if not spec.is_instrument:
        m = lifted @ joint.rho.matrix @ lifted.conj().T
        return Percept(None, 0.0), JointState(DensityOperator(m, joint.rho.dims), joint.separable_hint)
    probs = ch.instrument_distribution(lifted, joint.rho.matrix)
    probs[probs <= ch.ZERO_PROB_CUTOFF] = 0.0
    i = sample_index(probs, rng)
    k = spec.outcomes[i]
    _, post = ch.branch_apply(lifted, k, joint.rho)
    return Percept(k, spec.reward(k)), JointState(post, joint.separable_hint)
