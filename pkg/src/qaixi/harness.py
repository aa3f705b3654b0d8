"""Experiment drivers behind the command line: convergence, CHSH
discrimination, Kochen-Specker check, planning value, and single runs.

Every driver is a deterministic function of its config; output files use
fixed column orders, shortest round-trip float formatting and sorted JSON
keys so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bell
from .agent import AgentState, PlanningConfig, q_values, qaixi_policy, run_episode
from .builtin import builtin_dir
from .contextuality import (
    CABELLO_18_CONTEXTS,
    CABELLO_18_VECTORS,
    context_residuals,
    ks_uncolourability_check,
    make_ks_env,
    ray_projectors,
    sequential_marginal,
)
from .environments import EnvironmentInstance, find, load_class
from .errors import ConfigError
from .induction import gap_statistics, mixture_init, mixture_update

KINDS = ("converge", "chsh", "ks", "value", "run")
DEFAULT_CLASS = {"converge": "coins4", "chsh": "chsh", "ks": "ks", "value": "commuting", "run": "commuting"}
DEFAULT_TRUTH = {"coins4": "coin_050", "chsh": "chsh_quantum", "commuting": "mdp_a"}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int | None = None
    class_dir: str | None = None
    truth: str | None = None
    episodes: int = 200
    cycles: int = 500
    horizon: int = 3
    gamma: float = 0.9
    out: str | None = None
    policy: str | None = None
    history: list = field(default_factory=list)
    ks_file: str | None = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.seed is None:
            raise ConfigError("a --seed is required; experiments never seed from the clock")
        if self.episodes < 1 or self.cycles < 1:
            raise ConfigError("--episodes and --cycles must be at least 1")
        if self.policy not in (None, "random", "qaixi"):
            raise ConfigError(f"--policy must be 'random' or 'qaixi', got {self.policy!r}")
        try:
            PlanningConfig(self.horizon, self.gamma)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def planning(self) -> PlanningConfig:
        return PlanningConfig(self.horizon, self.gamma)

    def load(self):
        """The hypothesis class and the index of the true model."""
        if self.class_dir is None:
            name = DEFAULT_CLASS[self.kind]
            envs = load_class(builtin_dir(name))
            truth = self.truth or DEFAULT_TRUTH.get(name, envs[0].name)
        else:
            envs = load_class(self.class_dir)
            truth = self.truth or envs[0].name
        try:
            mixture_init(envs)
        except ValueError as exc:
            raise ConfigError(f"inconsistent hypothesis class: {exc}") from None
        return envs, find(envs, truth)


# -- formatting --------------------------------------------------------------

def fmt(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else fmt(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


TRAJECTORY_TAIL = ["divergence", "trace_distance", "bound_over_t"]
SUMMARY_COLUMNS = ["t", "mean_divergence", "se_divergence", "mean_trace_distance",
                   "se_trace_distance", "bound_over_t"]


def trajectory_columns(names) -> list[str]:
    return ["episode", "t"] + [f"w_{n}" for n in names] + TRAJECTORY_TAIL


# -- convergence -------------------------------------------------------------

@dataclass
class ConvergenceReport:
    names: list[str]
    truth: str
    g: float
    d0_bound: float
    d0_dilution: float
    t: np.ndarray
    mean_divergence: np.ndarray
    se_divergence: np.ndarray
    mean_trace_distance: np.ndarray
    se_trace_distance: np.ndarray
    bound: np.ndarray
    violations: int
    slope: float
    slope_window: tuple[int, int]
    mean_truth_weight: np.ndarray

    def summary(self) -> dict:
        return {
            "truth": self.truth, "hypotheses": self.names, "g": self.g,
            "d0_bound": self.d0_bound, "d0_dilution": self.d0_dilution,
            "bound_violations": self.violations,
            "trace_distance_loglog_slope": self.slope,
            "slope_window": list(self.slope_window),
            "final_mean_divergence": self.mean_divergence[-1],
            "final_mean_trace_distance": self.mean_trace_distance[-1],
            "final_mean_truth_weight": self.mean_truth_weight[-1],
        }


def loglog_slope(t, y) -> float:
    t, y = np.asarray(t, float), np.asarray(y, float)
    ok = (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(t[ok]), np.log(y[ok]), 1)[0])


def _mean_se(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    mean = a.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    with np.errstate(invalid="ignore"):
        se = a.std(axis=0, ddof=1) / np.sqrt(n)
    return mean, se


def run_converge(cfg: ExperimentConfig, slope_window=(10, 500)) -> ConvergenceReport:
    """N seeded episodes against the true model; sample means of the
    posterior divergence and trace distance versus the bound curve."""
    cfg.validate()
    envs, ti = cfg.load()
    truth = envs[ti]
    gap = gap_statistics(envs, ti)
    pcfg = cfg.planning()
    policy = cfg.policy or "random"
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.episodes)
    T = cfg.cycles
    div = np.empty((cfg.episodes, T + 1))
    td = np.empty((cfg.episodes, T + 1))
    wts = np.empty((cfg.episodes, T + 1, len(envs)))
    for e, ss in enumerate(seeds):
        agent = AgentState(mixture_init(envs))
        _, trace = run_episode(truth, agent, pcfg, T, ss, policy)
        div[e], td[e], wts[e] = trace.divergence, trace.trace_distance, trace.weights
    t = np.arange(T + 1)
    with np.errstate(divide="ignore"):
        bound = gap.d0_bound / t.astype(float)
    md, sd = _mean_se(div)
    mt, st = _mean_se(td)
    viol = int(np.sum(md[1:] > bound[1:] + 2 * sd[1:]))
    lo, hi = slope_window[0], min(slope_window[1], T)
    win = (t >= lo) & (t <= hi)
    slope = loglog_slope(t[win], mt[win]) if win.sum() >= 2 else float("nan")
    rep = ConvergenceReport([e.name for e in envs], truth.name, gap.g, gap.d0_bound, gap.d0_dilution,
                            t, md, sd, mt, st, bound, viol, slope, (lo, hi), wts[:, :, ti].mean(axis=0))
    if cfg.out:
        out = Path(cfg.out)
        rows = []
        for e in range(cfg.episodes):
            for s in range(T + 1):
                rows.append([e, s] + [fmt(w) for w in wts[e, s]] + [fmt(div[e, s]), fmt(td[e, s]), fmt(bound[s])])
        _write(out / "converge_trajectories.csv", _csv_text(trajectory_columns(rep.names), rows))
        srows = [[s, fmt(md[s]), fmt(sd[s]), fmt(mt[s]), fmt(st[s]), fmt(bound[s])] for s in range(T + 1)]
        _write(out / "converge_summary.csv", _csv_text(SUMMARY_COLUMNS, srows))
        _write(out / "converge_report.json", dumps(rep.summary() | {"config": _config_dict(cfg)}))
    return rep


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d.pop("out")
    return d


# -- CHSH --------------------------------------------------------------------

CHSH_COLUMNS_TAIL = ["action", "outcome", "reward"]


def run_chsh(cfg: ExperimentConfig) -> dict:
    """Truth = quantum CHSH source; settings drawn uniformly (default) or by
    the planner.  Reports the truth's posterior weight and the win rate."""
    cfg.validate()
    envs, ti = cfg.load()
    truth = envs[ti]
    pcfg = cfg.planning()
    policy = cfg.policy or "random"
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.episodes)
    T = cfg.cycles
    wts = np.empty((cfg.episodes, T + 1, len(envs)))
    rewards = np.empty((cfg.episodes, T))
    rows = []
    for e, ss in enumerate(seeds):
        agent = AgentState(mixture_init(envs))
        hist, trace = run_episode(truth, agent, pcfg, T, ss, policy)
        wts[e], rewards[e] = trace.weights, trace.rewards
        for s, c in enumerate(hist.cycles, start=1):
            rows.append([e, s] + [fmt(w) for w in trace.weights[s]] + [c.action, c.outcome, fmt(c.reward)])
    names = [e.name for e in envs]
    final_truth_w = wts[:, -1, ti]
    report = {
        "truth": truth.name,
        "hypotheses": names,
        "rounds": int(cfg.episodes * T),
        "mean_reward": float(rewards.mean()),
        "exact_truth_win_probability": bell.win_probability(truth),
        "lhv_max_win": str(bell.lhv_max_win()),
        "lhv_max_win_float": float(bell.lhv_max_win()),
        "final_truth_weight_mean": float(final_truth_w.mean()),
        "final_truth_weight_min": float(final_truth_w.min()),
        "mean_weight_trajectory": {n: wts[:, :, i].mean(axis=0) for i, n in enumerate(names)},
    }
    if cfg.out:
        out = Path(cfg.out)
        header = ["episode", "t"] + [f"w_{n}" for n in names] + CHSH_COLUMNS_TAIL
        _write(out / "chsh_trajectories.csv", _csv_text(header, rows))
        _write(out / "chsh_report.json", dumps(report | {"config": _config_dict(cfg)}))
    return report


# -- Kochen-Specker ----------------------------------------------------------

def load_ks_file(path) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """KS set file: ``{"vectors": [[...], ...], "contexts": [[i, j, ...], ...]}``
    (vector entries real, or [re, im] pairs)."""
    try:
        data = json.loads(Path(path).read_text())
        vecs = np.asarray(data["vectors"], dtype=float)
        if vecs.ndim == 3:
            vecs = vecs[..., 0] + 1j * vecs[..., 1]
        return vecs, [tuple(int(i) for i in c) for c in data["contexts"]]
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read KS set {path}: {exc}") from exc


def run_ks(cfg: ExperimentConfig, demo_cycles: int = 12) -> dict:
    """Exhaustive colouring search, context checks, and a short seeded
    measurement trajectory on the KS environment."""
    if cfg.seed is None:
        raise ConfigError("a --seed is required; experiments never seed from the clock")
    if cfg.ks_file:
        vecs, contexts = load_ks_file(cfg.ks_file)
    else:
        vecs, contexts = CABELLO_18_VECTORS, list(CABELLO_18_CONTEXTS)
    projs = ray_projectors(vecs)
    res = ks_uncolourability_check(projs, contexts)
    resid = context_residuals(projs, contexts)
    report = {
        "n_projectors": len(projs),
        "dimension": int(projs[0].shape[0]),
        "contexts": [list(c) for c in contexts],
        "colourable": res.colourable,
        "assignments": res.count,
        "witnesses": [list(w) for w in res.witnesses],
        "max_orthogonality_residual": max(r[0] for r in resid),
        "max_completeness_residual": max(r[1] for r in resid),
    }
    try:
        env = make_ks_env(projs, contexts)
    except ValueError as exc:
        report["environment_error"] = str(exc)
    else:
        report["trajectory"] = _ks_trajectory(env, contexts, cfg.seed, demo_cycles)
        report["context_dependence"] = _ks_context_dependence(env, projs, contexts)
    if cfg.out:
        _write(Path(cfg.out) / "ks_report.json", dumps(report | {"config": _config_dict(cfg)}))
    return report


def _ks_trajectory(env, contexts, seed, cycles) -> list[dict]:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    inst = EnvironmentInstance(env, rng)
    out = []
    for t in range(1, cycles + 1):
        aid = int(rng.integers(len(env.actions)))
        p = inst.step(aid)
        out.append({"t": t, "context": aid, "outcome": p.outcome,
                    "projector": int(contexts[aid][p.outcome])})
    return out


def _ks_context_dependence(env, projs, contexts) -> dict:
    """Largest spread, over preceding contexts, of the probability that a
    shared projector fires, with the state prepared on one of the rays."""
    best = {"spread": 0.0}
    for prep in range(len(projs)):
        state = projs[prep]
        for p in range(len(projs)):
            for second in [i for i, c in enumerate(contexts) if p in c]:
                vals = [sequential_marginal(env, contexts, first, second, p, state)
                        for first in range(len(contexts))]
                spread = max(vals) - min(vals)
                if spread > best["spread"] + 1e-12:
                    best = {"spread": spread, "prepared_ray": prep, "projector": p,
                            "measured_context": second,
                            "first_context_marginals": vals}
    return best


# -- value / run -------------------------------------------------------------

def parse_history(text: str | None) -> list[tuple[int, int | None]]:
    """``"0:1,1:0"`` -> [(0, 1), (1, 0)]; a bare action id means a unitary step."""
    if not text:
        return []
    out = []
    try:
        for item in text.split(","):
            item = item.strip()
            if ":" in item:
                a, k = item.split(":")
                out.append((int(a), int(k)))
            else:
                out.append((int(item), None))
    except ValueError:
        raise ConfigError(f"cannot parse history {text!r}; expected 'action:outcome,...'") from None
    return out


def run_value(cfg: ExperimentConfig) -> dict:
    cfg.validate()
    envs, _ = cfg.load()
    mix = mixture_init(envs)
    for a, k in cfg.history:
        try:
            mix = mixture_update(mix, a, k)
        except ValueError as exc:
            raise ConfigError(f"history step {a}:{k} is invalid: {exc}") from None
    pcfg = cfg.planning()
    q = q_values(mix, pcfg)
    report = {
        "hypotheses": mix.names,
        "history": [list(h) for h in cfg.history],
        "weights": mix.weights,
        "horizon": pcfg.horizon,
        "gamma": pcfg.gamma,
        "q_values": {str(a): v for a, v in q.items()},
        "value": max(q.values()),
        "action": qaixi_policy(mix, pcfg),
    }
    if cfg.out:
        _write(Path(cfg.out) / "value_report.json", dumps(report | {"config": _config_dict(cfg)}))
    return report


def run_run(cfg: ExperimentConfig) -> dict:
    cfg.validate()
    envs, ti = cfg.load()
    agent = AgentState(mixture_init(envs))
    hist, trace = run_episode(envs[ti], agent, cfg.planning(), cfg.cycles, cfg.seed, cfg.policy or "qaixi")
    report = {
        "truth": envs[ti].name,
        "hypotheses": trace.names,
        "policy": cfg.policy or "qaixi",
        "history": hist.to_json(),
        "divergence": trace.divergence,
        "trace_distance": trace.trace_distance,
        "final_weights": trace.weights[-1],
        "total_reward": float(trace.rewards.sum()),
    }
    if cfg.out:
        _write(Path(cfg.out) / "run_history.json", dumps(report | {"config": _config_dict(cfg)}))
    return report


RUNNERS = {"converge": run_converge, "chsh": run_chsh, "ks": run_ks, "value": run_value, "run": run_run}
