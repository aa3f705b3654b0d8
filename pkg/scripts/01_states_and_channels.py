# Density operators, channels and instruments
#
# A tour of the linear-algebra layer: states, Kraus channels, measurement
# instruments and the distance measures used later for convergence.

# %%
import numpy as np

from qaixi import channels as ch
from qaixi.core import bell_state, partial_trace, random_density, relative_entropy, trace_distance

rng = np.random.default_rng(0)

# %% [markdown]
# A Bell pair is pure, but each half on its own is maximally mixed.

# %%
phi = bell_state("phi+").projector((2, 2))
print("purity of the pair:", round(phi.purity(), 12))
print("reduced state of qubit A:\n", partial_trace(phi, [0]).matrix.real)

# %% [markdown]
# Channels shrink distinguishability.  Push two random qutrit states
# through a depolarizing channel of increasing strength and watch both
# the trace distance and the relative entropy fall.

# %%
rho, sigma = random_density(3, rng), random_density(3, rng)
for p in (0.0, 0.25, 0.5, 0.75, 1.0):
    dep = ch.depolarizing_channel(3, p)
    a, b = ch.apply_channel(dep, rho), ch.apply_channel(dep, sigma)
    print(f"p={p:4.2f}  T={trace_distance(a, b):.4f}  D={relative_entropy(a, b):.4f}")

# %% [markdown]
# An instrument gives both a classical outcome and a post-measurement state.
# Measuring |+> in the computational basis gives a fair coin and collapses
# the state to the observed basis vector.

# %%
plus = np.full((2, 2), 0.5)
meas = ch.basis_measurement(2)
print("outcome distribution:", ch.instrument_distribution(meas, plus))
p, post = ch.branch_apply(meas, 1, plus)
print(f"Pr(1) = {p}, post-state:\n", post.real)

# %% [markdown]
# The Choi state encodes a channel as a bipartite state; unitary channels
# give pure Choi states, the fully depolarizing channel gives I/4.

# %%
for name, chan in [("identity", ch.identity_channel(2)),
                   ("depolarizing", ch.depolarizing_channel(2, 1.0))]:
    print(name, "Choi purity:", round(ch.choi_vector(chan).purity(), 12))
