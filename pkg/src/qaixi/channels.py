"""Completely positive maps in Kraus form, quantum instruments, and
Choi-Jamiolkowski states.

Constructors never reject a map; :func:`validate` reports every broken
invariant with its measured residual, and callers that need a valid object
(environment builders, file loaders) raise on a non-empty report.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .core import (
    DensityOperator,
    as_matrix,
    max_entangled,
    random_unitary,
    tensor,
)

COMPLETENESS_TOL = 1e-9
ZERO_PROB_CUTOFF = 1e-12


def _freeze(ops) -> tuple[np.ndarray, ...]:
    out = []
    for m in ops:
        a = np.array(m, dtype=complex)
        if a.ndim != 2:
            raise ValueError(f"Kraus operator must be a matrix, got shape {a.shape}")
        a.setflags(write=False)
        out.append(a)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """CP map X -> sum_j M_j X M_j^dagger."""

    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = _freeze(self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(m.shape != shape for m in ops):
            raise ValueError("Kraus operators must share a shape")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def out_dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    @property
    def in_dim(self) -> int:
        return self.kraus_ops[0].shape[1]

    def gram(self) -> np.ndarray:
        """sum_j M_j^dagger M_j."""
        return sum(m.conj().T @ m for m in self.kraus_ops)

    @property
    def trace_preserving(self) -> bool:
        return completeness_residual(self.gram()) <= COMPLETENESS_TOL

    def __call__(self, rho):
        return apply_channel(self, rho)


@dataclass(frozen=True, eq=False)
class UnitaryAction:
    matrix: np.ndarray

    def __post_init__(self):
        u = np.array(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"unitary must be square, got shape {u.shape}")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def channel(self) -> KrausChannel:
        return KrausChannel((self.matrix,))


@dataclass(frozen=True, eq=False)
class Instrument:
    """Family of CP branch maps indexed by classical outcomes.

    ``branches`` preserves insertion order; that order defines the layout of
    the vectors returned by :func:`instrument_distribution`.
    """

    branches: Mapping[Hashable, KrausChannel]

    def __post_init__(self):
        if not self.branches:
            raise ValueError("an instrument needs at least one outcome")
        b = dict(self.branches)
        dims = {(ch.out_dim, ch.in_dim) for ch in b.values()}
        if len(dims) != 1:
            raise ValueError(f"branches disagree on dimensions: {sorted(dims)}")
        object.__setattr__(self, "branches", b)

    @property
    def outcomes(self) -> tuple:
        return tuple(self.branches)

    @property
    def dim(self) -> int:
        return next(iter(self.branches.values())).in_dim

    def total_channel(self) -> KrausChannel:
        """The summed (non-selective) map."""
        return KrausChannel(tuple(m for ch in self.branches.values() for m in ch.kraus_ops))

    def __getitem__(self, k) -> KrausChannel:
        try:
            return self.branches[k]
        except KeyError:
            raise ValueError(f"unknown outcome {k!r}; alphabet is {self.outcomes}") from None


def completeness_residual(gram: np.ndarray) -> float:
    """Spectral norm of (sum M^dagger M - I)."""
    return float(np.linalg.norm(gram - np.eye(gram.shape[0]), 2))


# -- application -------------------------------------------------------------

def _kraus_sum(ops, m: np.ndarray) -> np.ndarray:
    return sum(k @ m @ k.conj().T for k in ops)


def apply_channel(ch: KrausChannel, rho):
    """sum_j M_j rho M_j^dagger; density operators keep their wrapper."""
    m = as_matrix(rho)
    if m.shape[0] != ch.in_dim:
        raise ValueError(f"channel expects dimension {ch.in_dim}, state has {m.shape[0]}")
    out = _kraus_sum(ch.kraus_ops, m)
    if isinstance(rho, DensityOperator):
        dims = rho.dims if ch.out_dim == ch.in_dim else (ch.out_dim,)
        return DensityOperator(out, dims)
    return out


def branch_apply(instr: Instrument, k, rho) -> tuple[float, np.ndarray | DensityOperator | None]:
    """Probability of outcome ``k`` and the renormalised post-measurement state.

    For probabilities at or below 1e-12 the state is ``None``; such branches
    must be skipped by callers.
    """
    ch = instr[k]
    m = as_matrix(rho)
    if m.shape[0] != ch.in_dim:
        raise ValueError(f"instrument expects dimension {ch.in_dim}, state has {m.shape[0]}")
    unnorm = _kraus_sum(ch.kraus_ops, m)
    prob = max(float(np.trace(unnorm).real), 0.0)
    if prob <= ZERO_PROB_CUTOFF:
        return prob, None
    post = unnorm / prob
    post = (post + post.conj().T) / 2
    if isinstance(rho, DensityOperator):
        return prob, DensityOperator(post, rho.dims)
    return prob, post


def instrument_distribution(instr: Instrument, rho) -> np.ndarray:
    """Outcome probabilities Tr[E_k(rho)] in ``instr.outcomes`` order.

    The vector sums to Tr(rho), so sub-normalised inputs give
    sub-normalised distributions.
    """
    m = as_matrix(rho)
    if m.shape[0] != instr.dim:
        raise ValueError(f"instrument expects dimension {instr.dim}, state has {m.shape[0]}")
    probs = np.empty(len(instr.branches))
    for i, ch in enumerate(instr.branches.values()):
        # Tr[M rho M^dagger] = Tr[M^dagger M rho]
        probs[i] = np.real(np.einsum("ij,ji->", ch.gram(), m))
    return probs


def choi_vector(ch: KrausChannel) -> DensityOperator:
    """(id ⊗ Q)(|Φ+><Φ+|) on C^d ⊗ C^d; pure exactly when Q is unitary."""
    if ch.in_dim != ch.out_dim:
        raise ValueError(f"Choi state needs a square channel, got {ch.out_dim}x{ch.in_dim}")
    d = ch.in_dim
    phi = max_entangled(d).projector().matrix
    ext = KrausChannel(tuple(tensor(np.eye(d), m) for m in ch.kraus_ops))
    return DensityOperator(apply_channel(ext, phi), (d, d))


# -- validation --------------------------------------------------------------

@dataclass
class ValidationReport:
    failures: list[tuple[str, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "valid"
        return "; ".join(f"{name} (residual {r:.3g})" for name, r in self.failures)


def validate(obj) -> ValidationReport:
    """Check a KrausChannel, Instrument or UnitaryAction.

    Channels must be trace non-increasing (sum M^dagger M <= I); instruments
    must sum to a trace-preserving map and each branch must be trace
    non-increasing; unitaries must satisfy U^dagger U = I.
    """
    rep = ValidationReport()
    if isinstance(obj, UnitaryAction):
        r = completeness_residual(obj.matrix.conj().T @ obj.matrix)
        if r > COMPLETENESS_TOL:
            rep.failures.append(("unitarity", r))
    elif isinstance(obj, KrausChannel):
        excess = float(np.linalg.eigvalsh(obj.gram())[-1] - 1.0)
        if excess > COMPLETENESS_TOL:
            rep.failures.append(("trace non-increasing", completeness_residual(obj.gram())))
    elif isinstance(obj, Instrument):
        for k, ch in obj.branches.items():
            excess = float(np.linalg.eigvalsh(ch.gram())[-1] - 1.0)
            if excess > COMPLETENESS_TOL:
                rep.failures.append((f"branch {k!r} trace non-increasing", excess))
        r = completeness_residual(obj.total_channel().gram())
        if r > COMPLETENESS_TOL:
            rep.failures.append(("completeness", r))
    else:
        raise TypeError(f"cannot validate {type(obj).__name__}")
    return rep


# -- standard maps -----------------------------------------------------------

def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),))


def unitary_channel(u) -> KrausChannel:
    return KrausChannel((np.asarray(u, dtype=complex),))


def weyl_operators(dim: int) -> list[np.ndarray]:
    """The d^2 clock-and-shift operators X^a Z^b."""
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            for a in range(dim) for b in range(dim)]


def depolarizing_channel(dim: int, p: float) -> KrausChannel:
    """rho -> (1-p) rho + p Tr(rho) I/d."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing strength must be in [0, 1], got {p}")
    ops = [np.sqrt(1 - p) * np.eye(dim, dtype=complex)] if p < 1 else []
    ops += [np.sqrt(p) / dim * w for w in weyl_operators(dim)]
    return KrausChannel(tuple(ops))


def dephasing_channel(dim: int, p: float = 1.0) -> KrausChannel:
    """Mix rho with its computational-basis diagonal: (1-p) rho + p diag(rho)."""
    ops = [np.sqrt(1 - p) * np.eye(dim, dtype=complex)] if p < 1 else []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = np.sqrt(p)
        ops.append(e)
    return KrausChannel(tuple(ops))


def projective_instrument(projectors: Sequence, labels: Sequence | None = None) -> Instrument:
    """Lüders instrument with one projector Kraus operator per outcome."""
    labels = range(len(projectors)) if labels is None else labels
    return Instrument({k: KrausChannel((np.asarray(p, dtype=complex),))
                       for k, p in zip(labels, projectors)})


def basis_measurement(dim: int) -> Instrument:
    projs = []
    for i in range(dim):
        p = np.zeros((dim, dim), dtype=complex)
        p[i, i] = 1.0
        projs.append(p)
    return projective_instrument(projs)


def povm_instrument(effects: Sequence, labels: Sequence | None = None) -> Instrument:
    """Instrument with Kraus operators sqrt(E_k) for positive effects E_k."""
    labels = range(len(effects)) if labels is None else labels
    branches = {}
    for k, e in zip(labels, effects):
        w, v = np.linalg.eigh(np.asarray(e, dtype=complex))
        root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
        branches[k] = KrausChannel((root,))
    return Instrument(branches)


def _stinespring_kraus(dim: int, n_kraus: int, rng: np.random.Generator) -> list[np.ndarray]:
    # isometry V = U[:, :dim] from a Haar unitary on system ⊗ ancilla
    u = random_unitary(dim * n_kraus, rng)
    v = u[:, :dim]
    return [v[j * dim:(j + 1) * dim, :] for j in range(n_kraus)]


def random_channel(dim: int, rng: np.random.Generator, n_kraus: int | None = None) -> KrausChannel:
    """Random CPTP map from a Haar-random Stinespring dilation."""
    n_kraus = dim if n_kraus is None else n_kraus
    return KrausChannel(tuple(_stinespring_kraus(dim, n_kraus, rng)))


def random_instrument(dim: int, n_outcomes: int, rng: np.random.Generator,
                      kraus_per_outcome: int = 1) -> Instrument:
    """Random instrument: Stinespring Kraus operators grouped into outcomes."""
    ops = _stinespring_kraus(dim, n_outcomes * kraus_per_outcome, rng)
    return Instrument({k: KrausChannel(tuple(ops[k * kraus_per_outcome:(k + 1) * kraus_per_outcome]))
                       for k in range(n_outcomes)})


# -- JSON encoding -----------------------------------------------------------

def matrix_to_json(m) -> list[list[float]]:
    """Row-major list of [re, im] pairs."""
    a = np.asarray(as_matrix(m), dtype=complex)
    return [[float(z.real), float(z.imag)] for z in a.ravel()]


def matrix_from_json(data, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; nested row lists are also accepted."""
    a = np.asarray(data, dtype=float)
    if a.ndim == 3:  # rows of [re, im] pairs
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError("matrix must be a list of [re, im] pairs")
    z = a[:, 0] + 1j * a[:, 1]
    n = z.size
    if dim is None:
        dim = int(round(np.sqrt(n)))
        if dim * dim != n:
            raise ValueError(f"{n} entries do not form a square matrix; give dim")
    if n % dim:
        raise ValueError(f"{n} entries cannot have {dim} rows")
    return z.reshape(dim, n // dim)


def channel_to_json(ch: KrausChannel) -> list:
    return [matrix_to_json(m) for m in ch.kraus_ops]


def channel_from_json(data, dim: int | None = None) -> KrausChannel:
    return KrausChannel(tuple(matrix_from_json(m, dim) for m in data))


def instrument_to_json(instr: Instrument) -> list:
    return [channel_to_json(ch) for ch in instr.branches.values()]


def instrument_from_json(data, dim: int | None = None) -> Instrument:
    return Instrument({k: channel_from_json(ops, dim) for k, ops in enumerate(data)})
