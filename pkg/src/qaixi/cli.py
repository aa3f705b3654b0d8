"""Command line: ``qaixi {converge,chsh,ks,value,run} --seed N [options]``.

Exit status 0 on success, 2 for configuration errors (including an
observation the whole class rules out), 3 when a size bound is exceeded.
"""
from __future__ import annotations

import argparse
import sys

from .errors import CapacityError, ConfigError, ImpossibleObservationError
from .harness import KINDS, RUNNERS, ExperimentConfig, dumps, parse_history


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--class-dir", help="directory of environment JSON files (default: built-in class)")
    common.add_argument("--truth", help="name of the true environment within the class")
    common.add_argument("--episodes", type=int, default=None)
    common.add_argument("--cycles", type=int, default=None)
    common.add_argument("--horizon", type=int, default=3)
    common.add_argument("--gamma", type=float, default=0.9)
    common.add_argument("--seed", type=int, required=True)
    common.add_argument("--out", help="output directory for CSV/JSON files")
    common.add_argument("--policy", choices=["random", "qaixi"])

    p = argparse.ArgumentParser(prog="qaixi", description="Quantum AIXI experiments on finite classes.")
    sub = p.add_subparsers(dest="kind", required=True)
    sub.add_parser("converge", parents=[common], help="posterior convergence vs the divergence bound")
    sub.add_parser("chsh", parents=[common], help="quantum vs local-hidden-variable CHSH discrimination")
    ks = sub.add_parser("ks", parents=[common], help="Kochen-Specker colouring check")
    ks.add_argument("--ks-file", help="JSON file with 'vectors' and 'contexts' (default: 18-ray set)")
    val = sub.add_parser("value", parents=[common], help="planning value and chosen action")
    val.add_argument("--history", default="", help="observed history as 'action:outcome,...'")
    sub.add_parser("run", parents=[common], help="one episode, history written as JSON")
    return p


DEFAULTS = {"converge": (200, 500), "chsh": (20, 500), "ks": (1, 1), "value": (1, 1), "run": (1, 20)}


def config_from_args(args) -> ExperimentConfig:
    episodes, cycles = DEFAULTS[args.kind]
    return ExperimentConfig(
        kind=args.kind,
        seed=args.seed,
        class_dir=args.class_dir,
        truth=args.truth,
        episodes=episodes if args.episodes is None else args.episodes,
        cycles=cycles if args.cycles is None else args.cycles,
        horizon=args.horizon,
        gamma=args.gamma,
        out=args.out,
        policy=args.policy,
        history=parse_history(getattr(args, "history", "")),
        ks_file=getattr(args, "ks_file", None),
    )


def _summary(kind, result) -> dict:
    if kind == "converge":
        return result.summary()
    if kind == "chsh":
        return {k: v for k, v in result.items() if k != "mean_weight_trajectory"}
    if kind == "run":
        return {k: v for k, v in result.items() if k not in ("divergence", "trace_distance")}
    return result


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        result = RUNNERS[args.kind](cfg)
    except (ConfigError, ImpossibleObservationError) as exc:
        print(f"qaixi {args.kind}: error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"qaixi {args.kind}: capacity exceeded: {exc}", file=sys.stderr)
        return 3
    if args.kind == "ks":
        print(f"colourable: {str(result['colourable']).lower()}, assignments: {result['assignments']}")
    sys.stdout.write(dumps(_summary(args.kind, result)))
    return 0


assert set(DEFAULTS) == set(KINDS)

if __name__ == "__main__":
    sys.exit(main())
