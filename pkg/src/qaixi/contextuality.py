"""Kochen-Specker sets: exhaustive colouring search and a measurement
environment whose actions are the contexts of a KS set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels as ch
from .core import DensityOperator, maximally_mixed
from .environments import PERSISTENT, ActionSpec, EnvironmentModel, transition
from .errors import CapacityError

MAX_KS_SIZE = 24
_CHUNK = 1 << 20

# Cabello-Estebaranz-Garcia-Alcaine set in C^4: 18 rays, 9 orthogonal bases,
# each ray in exactly two bases.  Odd number of bases => no 0/1 colouring.
CABELLO_18_VECTORS = np.array([
    [0, 0, 0, 1], [0, 0, 1, 0], [1, 1, 0, 0], [1, -1, 0, 0],
    [0, 1, 0, 0], [1, 0, 1, 0], [1, 0, -1, 0], [1, -1, 1, -1],
    [1, -1, -1, 1], [0, 0, 1, 1], [1, 1, 1, 1], [0, 1, 0, -1],
    [1, 0, 0, 1], [1, 0, 0, -1], [0, 1, -1, 0], [1, 1, -1, 1],
    [1, 1, 1, -1], [-1, 1, 1, 1],
], dtype=float)

CABELLO_18_CONTEXTS = (
    (0, 1, 2, 3),
    (0, 4, 5, 6),
    (7, 8, 2, 9),
    (7, 10, 6, 11),
    (1, 4, 12, 13),
    (8, 10, 13, 14),
    (15, 16, 3, 9),
    (15, 17, 5, 11),
    (16, 17, 12, 14),
)


def ray_projectors(vectors) -> list[np.ndarray]:
    out = []
    for v in np.asarray(vectors, dtype=complex):
        v = v / np.linalg.norm(v)
        out.append(np.outer(v, v.conj()))
    return out


def cabello_set() -> tuple[list[np.ndarray], tuple[tuple[int, ...], ...]]:
    return ray_projectors(CABELLO_18_VECTORS), CABELLO_18_CONTEXTS


def context_residuals(projectors, contexts) -> list[tuple[float, float]]:
    """Per context: (max |P_i P_j| for i != j, ||sum P_i - I||)."""
    out = []
    for ctx in contexts:
        ps = [np.asarray(projectors[i]) for i in ctx]
        d = ps[0].shape[0]
        ortho = max((np.max(np.abs(ps[i] @ ps[j])) for i in range(len(ps))
                     for j in range(len(ps)) if i != j), default=0.0)
        ident = float(np.linalg.norm(sum(ps) - np.eye(d), 2))
        out.append((float(ortho), ident))
    return out


@dataclass(frozen=True)
class ColouringResult:
    colourable: bool
    count: int
    witnesses: tuple[tuple[int, ...], ...]
    n: int


def ks_uncolourability_check(ks_set, contexts, max_witnesses: int = 8) -> ColouringResult:
    """Search all 0/1 assignments to the ``n`` projectors for one that puts
    exactly one 1 in every context.

    ``ks_set`` may be the projector list or just its size.  Witnesses are
    returned as tuples of 0/1 values in projector order.
    """
    n = ks_set if isinstance(ks_set, (int, np.integer)) else len(ks_set)
    if n > MAX_KS_SIZE:
        raise CapacityError(f"exhaustive colouring search limited to {MAX_KS_SIZE} projectors, got {n}")
    ctx = [tuple(int(i) for i in c) for c in contexts]
    for c in ctx:
        if any(i < 0 or i >= n for i in c):
            raise ValueError(f"context {c} refers to a projector outside 0..{n - 1}")
    total = 1 << n
    count = 0
    witnesses = []
    for start in range(0, total, _CHUNK):
        a = np.arange(start, min(start + _CHUNK, total), dtype=np.uint32)
        ok = np.ones(a.shape, dtype=bool)
        for c in ctx:
            s = np.zeros(a.shape, dtype=np.uint8)
            for i in c:
                s += ((a >> np.uint32(i)) & np.uint32(1)).astype(np.uint8)
            ok &= s == 1
        hits = a[ok]
        count += int(hits.size)
        for h in hits[: max(0, max_witnesses - len(witnesses))]:
            witnesses.append(tuple(int(h >> i) & 1 for i in range(n)))
    return ColouringResult(count > 0, count, tuple(witnesses), n)


def make_ks_env(ks_set, contexts, initial_state=None, description_length: int = 4,
                name: str = "ks_contexts", rewards=None) -> EnvironmentModel:
    """Persistent environment whose action ``c`` measures context ``contexts[c]``.

    Outcome ``k`` of action ``c`` is the ``k``-th projector listed in that
    context.  ``rewards[c][k]`` defaults to 0.
    """
    projs = [np.asarray(p, dtype=complex) for p in ks_set]
    for ci, ((ortho, ident), ctx) in enumerate(zip(context_residuals(projs, contexts), contexts)):
        if ortho > 1e-9 or ident > 1e-9:
            raise ValueError(f"context {ci} {tuple(ctx)} is not a resolution of the identity "
                             f"(orthogonality {ortho:.3g}, completeness {ident:.3g})")
    d = projs[0].shape[0]
    rho = maximally_mixed(d) if initial_state is None else initial_state
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator(rho)
    actions = {}
    for ci, ctx in enumerate(contexts):
        instr = ch.projective_instrument([projs[i] for i in ctx])
        r = tuple(rewards[ci]) if rewards is not None else (0.0,) * len(ctx)
        actions[ci] = ActionSpec(ci, "instrument", instr, r, f"context {ci} {tuple(int(i) for i in ctx)}")
    return EnvironmentModel(name, rho, actions, description_length, PERSISTENT)


def sequential_marginal(env: EnvironmentModel, contexts, first: int, second: int,
                        projector: int, state=None) -> float:
    """Probability that ``projector`` fires when context ``second`` is
    measured right after context ``first`` (first outcome averaged over).
    """
    rho = env.initial_state.matrix if state is None else np.asarray(state, dtype=complex)
    pos = list(contexts[second]).index(projector)
    total = 0.0
    for k in env.action(first).outcomes:
        p1, post = transition(env, rho, first, k)
        if post is None:
            continue
        p2, _ = transition(env, post, second, pos)
        total += p1 * p2
    return total
