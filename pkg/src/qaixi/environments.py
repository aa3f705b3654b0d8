"""Environment hypotheses: an initial state on H_E, a table of actions
(unitaries or instruments), a reward table over (action, outcome), and a
declared description length in bits.

Two dynamics modes are supported.  In ``episodic`` environments every
instrument action ends a round and the initial state is prepared afresh for
the next one (i.i.d. sources such as coins or Bell pairs).  In
``persistent`` environments a single register carries the post-measurement
state from cycle to cycle.

Quantum states are never copied between cycles: :class:`EnvironmentInstance`
holds the only live register and a measurement replaces it.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import channels as ch
from .channels import Instrument, KrausChannel, UnitaryAction
from .core import DensityOperator, as_matrix
from .errors import ConfigError

EPISODIC = "episodic"
PERSISTENT = "persistent"
MODES = (EPISODIC, PERSISTENT)


@dataclass(frozen=True, eq=False)
class ActionSpec:
    """One action of an environment.

    ``rewards`` lists the reward of each instrument outcome in the
    instrument's outcome order; unitary actions carry no rewards and emit
    reward 0.
    """

    id: int
    kind: str
    payload: UnitaryAction | Instrument
    rewards: tuple[float, ...] = ()
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("unitary", "instrument"):
            raise ValueError(f"action kind must be 'unitary' or 'instrument', got {self.kind!r}")
        if self.kind == "unitary" and not isinstance(self.payload, UnitaryAction):
            raise ValueError("unitary action needs a UnitaryAction payload")
        if self.kind == "instrument" and not isinstance(self.payload, Instrument):
            raise ValueError("instrument action needs an Instrument payload")
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))

    @property
    def is_instrument(self) -> bool:
        return self.kind == "instrument"

    @property
    def outcomes(self) -> tuple:
        return self.payload.outcomes if self.is_instrument else ()

    @property
    def dim(self) -> int:
        return self.payload.dim

    def reward(self, outcome) -> float:
        if not self.is_instrument:
            return 0.0
        return self.rewards[self.payload.outcomes.index(outcome)]

    @cached_property
    def context(self) -> str:
        """Descriptor identifying the applied map: label plus a digest of its Kraus data."""
        if self.is_instrument:
            mats = [m for c in self.payload.branches.values() for m in c.kraus_ops]
        else:
            mats = [self.payload.matrix]
        h = hashlib.sha1()
        for m in mats:
            h.update(np.round(m, 12).astype(np.complex128).tobytes())
        name = self.label or f"action {self.id}"
        return f"{name} [{self.kind}:{h.hexdigest()[:12]}]"


@dataclass(frozen=True, eq=False)
class EnvironmentModel:
    name: str
    initial_state: DensityOperator
    actions: Mapping[int, ActionSpec]
    description_length: int = 0
    mode: str = PERSISTENT

    def __post_init__(self):
        rho = self.initial_state
        if not isinstance(rho, DensityOperator):
            rho = DensityOperator(rho)
        object.__setattr__(self, "initial_state", rho)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.description_length) < 0:
            raise ValueError("description length must be non-negative")
        object.__setattr__(self, "description_length", int(self.description_length))
        acts = {int(k): v for k, v in sorted(dict(self.actions).items())}
        if not acts:
            raise ValueError(f"environment {self.name!r} has no actions")
        for aid, spec in acts.items():
            if aid != spec.id:
                raise ValueError(f"action key {aid} does not match spec id {spec.id}")
            if spec.dim != rho.dim:
                raise ValueError(f"action {aid} acts on dimension {spec.dim}, state has {rho.dim}")
            report = ch.validate(spec.payload)
            if not report.ok:
                raise ValueError(f"action {aid} of {self.name!r} is invalid: {report}")
            if spec.is_instrument:
                if len(spec.rewards) != len(spec.outcomes):
                    raise ValueError(f"action {aid}: need one reward per outcome "
                                     f"({len(spec.outcomes)}), got {len(spec.rewards)}")
                if any(not 0.0 <= r <= 1.0 for r in spec.rewards):
                    raise ValueError(f"action {aid}: rewards must lie in [0, 1]")
        object.__setattr__(self, "actions", acts)

    @property
    def env_dim(self) -> int:
        return self.initial_state.dim

    @property
    def action_ids(self) -> tuple[int, ...]:
        return tuple(self.actions)

    def action(self, aid) -> ActionSpec:
        try:
            return self.actions[int(aid)]
        except (KeyError, TypeError, ValueError):
            raise ValueError(f"unknown action {aid!r} for environment {self.name!r}") from None

    def reward(self, aid, outcome) -> float:
        return self.action(aid).reward(outcome)

    def __repr__(self):
        return (f"EnvironmentModel({self.name!r}, dim={self.env_dim}, mode={self.mode}, "
                f"actions={list(self.actions)}, bits={self.description_length})")


@dataclass(frozen=True)
class Percept:
    outcome: int | None
    reward: float


@dataclass(frozen=True)
class Cycle:
    action: int
    context: str
    outcome: int | None
    reward: float


@dataclass
class History:
    """Chronological record of interaction cycles."""

    cycles: list[Cycle] = field(default_factory=list)

    def append(self, action: int, context: str, percept: Percept) -> None:
        self.cycles.append(Cycle(int(action), context, percept.outcome, float(percept.reward)))

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)

    def pairs(self) -> list[tuple[int, int | None]]:
        return [(c.action, c.outcome) for c in self.cycles]

    def to_json(self) -> list[dict]:
        return [{"t": i + 1, "action": c.action, "context": c.context,
                 "outcome": c.outcome, "reward": c.reward}
                for i, c in enumerate(self.cycles)]


# -- dynamics ----------------------------------------------------------------

def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; deterministic given the generator state."""
    c = np.cumsum(probs)
    u = rng.random() * c[-1]
    return int(min(np.searchsorted(c, u, side="right"), len(probs) - 1))


def transition(env: EnvironmentModel, state: np.ndarray, aid, outcome) -> tuple[float, np.ndarray | None]:
    """Probability of ``outcome`` under ``aid`` and the state the environment
    holds afterwards (``None`` for a zero-probability branch).

    ``outcome`` is ignored for unitary actions, which succeed with probability 1.
    """
    spec = env.action(aid)
    if not spec.is_instrument:
        u = spec.payload.matrix
        return 1.0, u @ state @ u.conj().T
    p, post = ch.branch_apply(spec.payload, outcome, state)
    if post is None:
        return p, None
    if env.mode == EPISODIC:
        return p, env.initial_state.matrix
    return p, post


def env_step(env: EnvironmentModel, state, aid, rng: np.random.Generator) -> tuple[Percept, DensityOperator]:
    """Apply action ``aid`` to ``state`` and sample a percept.

    Unitary actions return the percept ``(None, 0.0)``.  Instrument actions
    draw an outcome by the Born rule; the returned state is the renormalised
    post-measurement state (or the freshly prepared initial state in
    episodic mode).
    """
    m = as_matrix(state)
    if m.shape[0] != env.env_dim:
        raise ValueError(f"state dimension {m.shape[0]} != environment dimension {env.env_dim}")
    spec = env.action(aid)
    if not spec.is_instrument:
        _, nxt = transition(env, m, aid, None)
        return Percept(None, 0.0), DensityOperator.trusted(nxt, env.initial_state.dims)
    probs = np.clip(ch.instrument_distribution(spec.payload, m), 0.0, None)
    i = sample_index(probs, rng)
    k = spec.outcomes[i]
    _, nxt = transition(env, m, aid, k)
    return Percept(k, spec.reward(k)), DensityOperator.trusted(nxt, env.initial_state.dims)


class EnvironmentInstance:
    """A live environment register.

    Each :meth:`step` consumes the current state; there is no way to rewind
    or re-measure an earlier state instance.  :meth:`true_state` is the
    experimenter's view, used only for divergence diagnostics.
    """

    def __init__(self, model: EnvironmentModel, rng: np.random.Generator):
        self.model = model
        self._rng = rng
        self._state = model.initial_state

    def step(self, aid) -> Percept:
        percept, self._state = env_step(self.model, self._state, aid, self._rng)
        return percept

    def true_state(self) -> DensityOperator:
        return self._state


# -- classical embeddings ----------------------------------------------------

def _projector(i: int, d: int) -> np.ndarray:
    p = np.zeros((d, d), dtype=complex)
    p[i, i] = 1.0
    return p


def make_classical_env(cond_probs, rewards, bits: int, name: str = "classical",
                       initial=None) -> EnvironmentModel:
    """Embed a classical environment as diagonal states and classical instruments.

    ``cond_probs`` is either

    * shape ``(A, K)``: an i.i.d. source whose outcome distribution depends
      on the action.  If all rows agree the state is ``diag(row)``, prepared
      each round, and every action is a computational-basis measurement.
    * shape ``(A, S, S)``: a fully observed Markov decision process on ``S``
      states; ``cond_probs[a, s, s']`` is the probability of moving from
      ``s`` to ``s'`` (and observing ``s'``).  ``initial`` gives the start
      distribution (uniform by default).

    ``rewards[a][k]`` is the reward for outcome ``k`` of action ``a``.
    """
    p = np.asarray(cond_probs, dtype=float)
    if np.any(p < -1e-12):
        raise ValueError("conditional probabilities must be non-negative")
    sums = p.sum(axis=-1)
    if np.max(np.abs(sums - 1.0)) > 1e-9:
        raise ValueError(f"conditional distributions must sum to 1 (max deviation "
                         f"{np.max(np.abs(sums - 1.0)):.3g})")
    p = np.clip(p, 0.0, None)
    r = np.asarray(rewards, dtype=float)
    actions = {}
    if p.ndim == 2:
        n_act, k_out = p.shape
        if r.shape != (n_act, k_out):
            raise ValueError(f"rewards must have shape {(n_act, k_out)}")
        iid_same = np.allclose(p, p[0], atol=1e-15, rtol=0)
        if iid_same:
            rho0 = np.diag(p[0]).astype(complex)
        else:
            rho0 = np.eye(k_out, dtype=complex) / k_out
        for a in range(n_act):
            if iid_same:
                instr = ch.projective_instrument([_projector(k, k_out) for k in range(k_out)])
            else:
                # outcome k is emitted and recorded whatever the prepared state
                instr = Instrument({k: KrausChannel(tuple(
                    np.sqrt(p[a, k]) * np.outer(np.eye(k_out)[k], np.eye(k_out)[s])
                    for s in range(k_out))) for k in range(k_out)})
            actions[a] = ActionSpec(a, "instrument", instr, tuple(r[a]), f"{name}:a{a}")
        return EnvironmentModel(name, DensityOperator(rho0), actions, bits, EPISODIC)
    if p.ndim == 3:
        n_act, n_s, n_s2 = p.shape
        if n_s != n_s2:
            raise ValueError("MDP table must have shape (A, S, S)")
        if r.shape != (n_act, n_s):
            raise ValueError(f"rewards must have shape {(n_act, n_s)}")
        init = np.full(n_s, 1.0 / n_s) if initial is None else np.asarray(initial, dtype=float)
        if abs(init.sum() - 1.0) > 1e-9 or np.any(init < 0):
            raise ValueError("initial distribution must be a probability vector")
        basis = np.eye(n_s)
        for a in range(n_act):
            instr = Instrument({k: KrausChannel(tuple(
                np.sqrt(p[a, s, k]) * np.outer(basis[k], basis[s]) for s in range(n_s)))
                for k in range(n_s)})
            actions[a] = ActionSpec(a, "instrument", instr, tuple(r[a]), f"{name}:a{a}")
        return EnvironmentModel(name, DensityOperator(np.diag(init).astype(complex)),
                                actions, bits, PERSISTENT)
    raise ValueError("cond_probs must be a 2-D (i.i.d.) or 3-D (MDP) table")


# -- JSON environment definitions --------------------------------------------

def environment_to_json(env: EnvironmentModel) -> dict:
    acts = []
    for spec in env.actions.values():
        entry = {"id": spec.id, "kind": spec.kind}
        if spec.label:
            entry["label"] = spec.label
        if spec.is_instrument:
            entry["kraus"] = ch.instrument_to_json(spec.payload)
            entry["rewards"] = list(spec.rewards)
        else:
            entry["unitary"] = ch.matrix_to_json(spec.payload.matrix)
        acts.append(entry)
    out = {
        "name": env.name,
        "dim": env.env_dim,
        "mode": env.mode,
        "initial_state": ch.matrix_to_json(env.initial_state.matrix),
        "actions": acts,
        "description_length": env.description_length,
    }
    if len(env.initial_state.dims) > 1:
        out["dims"] = list(env.initial_state.dims)
    return out


def environment_from_json(data: dict) -> EnvironmentModel:
    """Build an environment from its JSON definition; malformed input raises ConfigError."""
    try:
        dim = int(data["dim"])
        dims = tuple(data.get("dims", (dim,)))
        rho = DensityOperator(ch.matrix_from_json(data["initial_state"], dim), dims)
        actions = {}
        for entry in data["actions"]:
            aid = int(entry["id"])
            kind = entry["kind"]
            if kind == "instrument":
                payload = ch.instrument_from_json(entry["kraus"], dim)
                rewards = tuple(entry["rewards"])
            elif kind == "unitary":
                payload = UnitaryAction(ch.matrix_from_json(entry["unitary"], dim))
                rewards = ()
            else:
                raise ValueError(f"unknown action kind {kind!r}")
            actions[aid] = ActionSpec(aid, kind, payload, rewards, entry.get("label", ""))
        return EnvironmentModel(str(data["name"]), rho, actions,
                                int(data.get("description_length", 0)),
                                data.get("mode", PERSISTENT))
    except (KeyError, TypeError, ValueError) as exc:
        name = data.get("name", "?") if isinstance(data, dict) else "?"
        raise ConfigError(f"invalid environment definition {name!r}: {exc}") from exc


def save_environment(env: EnvironmentModel, path) -> None:
    Path(path).write_text(json.dumps(environment_to_json(env), indent=1) + "\n")


def load_environment(path) -> EnvironmentModel:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read environment file {path}: {exc}") from exc
    return environment_from_json(data)


def load_class(directory) -> list[EnvironmentModel]:
    """All ``*.json`` environments in ``directory``, ordered by file name."""
    d = Path(directory)
    if not d.is_dir():
        raise ConfigError(f"class directory {d} does not exist")
    files = sorted(d.glob("*.json"))
    if not files:
        raise ConfigError(f"class directory {d} contains no environment files")
    envs = [load_environment(f) for f in files]
    names = [e.name for e in envs]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate environment names in {d}: {names}")
    return envs


def find(envs: Sequence[EnvironmentModel], name: str) -> int:
    for i, e in enumerate(envs):
        if e.name == name:
            return i
    raise ConfigError(f"environment {name!r} not in class {[e.name for e in envs]}")
