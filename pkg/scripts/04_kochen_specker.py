# Contextuality with eighteen rays in four dimensions
#
# Nine orthonormal bases built from eighteen rays, each ray shared by two
# bases.  No assignment of 0/1 values to the rays can put exactly one 1 in
# every basis: the 9 bases would need an odd number of ones while each ray
# is counted twice.

# %%
import numpy as np

from qaixi.contextuality import cabello_set, context_residuals, ks_uncolourability_check, make_ks_env
from qaixi.environments import EnvironmentInstance

projs, contexts = cabello_set()
print("contexts:", contexts)
print("worst resolution-of-identity residual:", max(max(r) for r in context_residuals(projs, contexts)))

# %%
res = ks_uncolourability_check(projs, contexts)
print(f"colourable: {res.colourable}, valid assignments: {res.count} of 2^{res.n}")

# %% [markdown]
# Dropping one basis makes the set colourable again.

# %%
fewer = ks_uncolourability_check(len(projs), contexts[:-1])
print(f"8 contexts: colourable {fewer.colourable}, {fewer.count} assignments; example {fewer.witnesses[0]}")

# %% [markdown]
# As an environment, each action measures one basis and the register keeps
# the post-measurement ray.  Repeating a basis repeats its outcome; a
# different basis then re-randomises the register.

# %%
env = make_ks_env(projs, contexts)
inst = EnvironmentInstance(env, np.random.default_rng(4))
for c in (0, 0, 1, 1, 5):
    p = inst.step(c)
    print(f"context {c}: projector {contexts[c][p.outcome]}")
