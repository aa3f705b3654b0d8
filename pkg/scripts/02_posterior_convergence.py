# Bayesian mixtures over environment hypotheses
#
# Four biased coins with description lengths 1, 2, 3, 3 bits.  The fair
# coin is the truth.  We watch the posterior move towards it and compare the
# divergence of the mixture state from the true state with the bound
# (l* ln 2 + ln(1 + g)) / t.

# %%
import numpy as np

from qaixi.agent import AgentState, PlanningConfig, run_episode
from qaixi.builtin import coins_class
from qaixi.harness import loglog_slope
from qaixi.induction import gap_statistics, mixture_init

envs = coins_class()
truth_index = [e.name for e in envs].index("coin_050")
gap = gap_statistics(envs, truth_index)
print("hypotheses:", [(e.name, e.description_length) for e in envs])
print(f"complexity gap g = {gap.g}, initial bound D0 = {gap.d0_bound:.4f}")

# %% [markdown]
# One episode, measured every cycle.  Prior weights are 2^-bits normalised.

# %%
agent = AgentState(mixture_init(envs))
_, trace = run_episode(envs[truth_index], agent, PlanningConfig(1, 0.9), 300, seed=1, policy="random")
for t in (0, 1, 10, 100, 300):
    w = ", ".join(f"{x:.3f}" for x in trace.weights[t])
    print(f"t={t:3d}  weights [{w}]  D={trace.divergence[t]:.5f}")

# %% [markdown]
# Averaging over episodes: the mean divergence sits below the bound curve
# and the mean trace distance decays.  With 40 short episodes the fitted
# slope is noisy; the acceptance suite uses 200 episodes of 500 cycles.

# %%
n, T = 40, 300
div = np.empty((n, T + 1))
td = np.empty((n, T + 1))
for e, ss in enumerate(np.random.SeedSequence(7).spawn(n)):
    _, tr = run_episode(envs[truth_index], AgentState(mixture_init(envs)), PlanningConfig(1, 0.9), T, ss, "random")
    div[e], td[e] = tr.divergence, tr.trace_distance
t = np.arange(1, T + 1)
bound = gap.bound_curve(t)
print("max of mean divergence / bound:", float(np.max(div[:, 1:].mean(axis=0) / bound)))
print("trace-distance log-log slope on [10, 300]:", round(loglog_slope(t[9:], td[:, 10:].mean(axis=0)), 3))
