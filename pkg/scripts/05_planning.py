# Planning by expectimax over the mixture
#
# Two fully observed two-state Markov chains form a commuting (diagonal)
# class.  The quantum planner and a plain probability-table Bayes agent
# should agree on every value and every action.

# %%
import itertools

from qaixi.agent import PlanningConfig, q_values, qaixi_policy
from qaixi.builtin import MDP_BITS, MDP_REWARDS, MDP_TABLES, commuting_class
from qaixi.classical import ClassicalBayesAgent, mdp_env
from qaixi.induction import mixture_init, mixture_update

envs = commuting_class()
ref = ClassicalBayesAgent([mdp_env(MDP_TABLES[e.name], MDP_REWARDS) for e in envs],
                          [MDP_BITS[e.name] for e in envs], horizon=3, gamma=0.9)
cfg = PlanningConfig(horizon=3, gamma=0.9)

# %%
for hist in [[], [(0, 1)], [(0, 1), (1, 1)], [(1, 0), (0, 0), (0, 1)]]:
    mix = mixture_init(envs)
    for a, k in hist:
        mix = mixture_update(mix, a, k)
    q = q_values(mix, cfg)
    print(f"history {hist}: weights {mix.weights.round(3)}, Q {[round(float(q[a]), 6) for a in q]}, "
          f"action {qaixi_policy(mix, cfg)} (classical {ref.act(hist)})")

# %% [markdown]
# Exhaustive check over every history of length up to 3.

# %%
agree = total = 0
for n in range(4):
    for hist in itertools.product(itertools.product(range(2), range(2)), repeat=n):
        mix = mixture_init(envs)
        for a, k in hist:
            mix = mixture_update(mix, a, k)
        agree += qaixi_policy(mix, cfg) == ref.act(list(hist))
        total += 1
print(f"{agree}/{total} histories agree")
