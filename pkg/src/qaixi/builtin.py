"""Environment classes shipped with the package.

The JSON files under ``qaixi/data/classes`` are generated from the
definitions here by :func:`write_builtin_classes`; a test checks the two stay
in sync.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from . import bell
from .contextuality import cabello_set, make_ks_env
from .environments import EnvironmentModel, make_classical_env, save_environment

# Convergence class: four biased coins; the fair coin (3rd entry, 2 bits) is
# the default truth.  Reward 1 for heads (outcome 0).
COIN_BIASES = (0.42, 0.5, 0.58, 0.66)
COIN_BITS = (1, 2, 3, 3)
COIN_TRUTH = "coin_050"

# Commuting-limit class: two fully observed 2-state MDPs, two actions.
MDP_TABLES = {
    "mdp_a": [[[0.8, 0.2], [0.3, 0.7]], [[0.5, 0.5], [0.1, 0.9]]],
    "mdp_b": [[[0.4, 0.6], [0.7, 0.3]], [[0.9, 0.1], [0.2, 0.8]]],
}
MDP_BITS = {"mdp_a": 1, "mdp_b": 2}
MDP_REWARDS = [[0.0, 1.0], [0.2, 0.9]]


def coin_name(p: float) -> str:
    return f"coin_{round(p * 100):03d}"


def coins_class(biases=COIN_BIASES, bits=COIN_BITS) -> list[EnvironmentModel]:
    return [make_classical_env([[p, 1 - p]], [[1.0, 0.0]], b, coin_name(p))
            for p, b in zip(biases, bits)]


def commuting_class() -> list[EnvironmentModel]:
    return [make_classical_env(MDP_TABLES[n], MDP_REWARDS, MDP_BITS[n], n) for n in MDP_TABLES]


def chsh_class() -> list[EnvironmentModel]:
    return [bell.make_chsh_env(description_length=3),
            bell.make_best_lhv_env(description_length=2),
            bell.make_uniform_lhv_env(description_length=1)]


def ks_class() -> list[EnvironmentModel]:
    projs, contexts = cabello_set()
    return [make_ks_env(projs, contexts, name="ks_cabello18")]


def deterministic_class() -> list[EnvironmentModel]:
    """One environment, two actions, every action pays reward 1."""
    return [make_classical_env([[1.0, 0.0], [1.0, 0.0]], [[1.0, 1.0], [1.0, 1.0]], 0, "always_reward")]


BUILTIN = {
    "coins4": coins_class,
    "commuting": commuting_class,
    "chsh": chsh_class,
    "ks": ks_class,
    "deterministic": deterministic_class,
}


def builtin_dir(name: str) -> Path:
    return Path(str(resources.files("qaixi") / "data" / "classes" / name))


def write_builtin_classes(root) -> None:
    root = Path(root)
    for cls, make in BUILTIN.items():
        d = root / cls
        d.mkdir(parents=True, exist_ok=True)
        for i, env in enumerate(make()):
            save_environment(env, d / f"{i:02d}_{env.name}.json")


if __name__ == "__main__":
    import sys

    write_builtin_classes(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "data" / "classes")
