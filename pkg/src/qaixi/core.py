"""Dense linear algebra for small Hilbert spaces.

States are stored as plain complex ``numpy`` arrays.  :class:`DensityOperator`
wraps a matrix together with its tensor-factor dimensions and checks the
state invariants once, at construction; the functions below accept either
a ``DensityOperator`` or a bare array.

All entropies use the natural logarithm.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9
SUPPORT_CUTOFF = 1e-12
MAX_DIM = 16


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive semidefinite matrix with trace in (0, 1].

    Sub-normalised (semi-density) operators are allowed.  ``dims`` lists the
    tensor factors; their product must equal the matrix dimension.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density operator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density operator has non-finite entries")
        dims = tuple(int(x) for x in self.dims) or (m.shape[0],)
        if int(np.prod(dims)) != m.shape[0]:
            raise ValueError(f"dims {dims} do not multiply to {m.shape[0]}")
        herm = np.max(np.abs(m - m.conj().T), initial=0.0)
        if herm > HERMITIAN_TOL:
            raise ValueError(f"not Hermitian (residual {herm:.3g})")
        lam_min = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
        if lam_min < -PSD_TOL:
            raise ValueError(f"not positive semidefinite (min eigenvalue {lam_min:.3g})")
        tr = np.trace(m).real
        if not (0.0 < tr <= 1.0 + PSD_TOL):
            raise ValueError(f"trace {tr:.6g} outside (0, 1]")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def trusted(cls, matrix: np.ndarray, dims: Sequence[int]) -> "DensityOperator":
        """Wrap a matrix produced by a validity-preserving operation without re-checking it."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "matrix", _frozen(matrix))
        object.__setattr__(obj, "dims", tuple(dims))
        return obj

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return purity(self.matrix)

    def normalized(self) -> "DensityOperator":
        return DensityOperator(self.matrix / self.trace, self.dims)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"DensityOperator(dims={self.dims}, trace={self.trace:.6g})"


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector in a ``dim``-dimensional Hilbert space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state vector has norm {norm:.12g}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self, dims: Sequence[int] = ()) -> DensityOperator:
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), tuple(dims))


Operator = Union[DensityOperator, np.ndarray]


def as_matrix(x) -> np.ndarray:
    if isinstance(x, DensityOperator):
        return x.matrix
    if isinstance(x, PureState):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    return np.asarray(x, dtype=complex)


def _dims_of(x, dims=None) -> tuple[int, ...]:
    if dims is not None:
        return tuple(int(d) for d in dims)
    if isinstance(x, DensityOperator):
        return x.dims
    return (as_matrix(x).shape[0],)


# -- constructors ------------------------------------------------------------

def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def basis_projector(index: int, dim: int) -> DensityOperator:
    return PureState(ket(index, dim)).projector()


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim, dtype=complex) / dim)


def bell_state(name: str = "phi+") -> PureState:
    """One of the four two-qubit Bell vectors: ``phi+``, ``phi-``, ``psi+``, ``psi-``."""
    s = 1 / np.sqrt(2)
    vecs = {
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
    }
    try:
        return PureState(np.array(vecs[name.lower()], dtype=complex))
    except KeyError:
        raise ValueError(f"unknown Bell state {name!r}") from None


def max_entangled(dim: int) -> PureState:
    """(1/sqrt d) sum_i |i i>."""
    v = np.zeros(dim * dim, dtype=complex)
    v[[i * dim + i for i in range(dim)]] = 1 / np.sqrt(dim)
    return PureState(v)


# -- structural operations ---------------------------------------------------

def tensor(a, b):
    """Kronecker product; ``dims`` of density operators are concatenated."""
    m = np.kron(as_matrix(a), as_matrix(b))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(m, a.dims + b.dims)
    return m


def tensor_all(ops: Sequence):
    return reduce(tensor, ops)


def partial_trace(rho, keep, dims: Sequence[int] | None = None):
    """Trace out every subsystem not listed in ``keep``.

    The kept factors appear in their original order.  ``dims`` is required
    when ``rho`` is a bare array.
    """
    dims = _dims_of(rho, dims)
    m = as_matrix(rho)
    if int(np.prod(dims)) != m.shape[0]:
        raise ValueError(f"dims {dims} do not match operator dimension {m.shape[0]}")
    if isinstance(keep, (int, np.integer)):
        keep = [keep]
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"subsystem index out of range for dims {dims}: {keep}")
    traced = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    # trace out from the highest index so axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    kept_dims = tuple(dims[i] for i in keep)
    d = int(np.prod(kept_dims))
    out = t.reshape(d, d)
    if isinstance(rho, DensityOperator):
        return DensityOperator(out, kept_dims)
    return out


# -- spectral tools ----------------------------------------------------------

def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def eigendecompose_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""
    m = as_matrix(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m):
        raise ValueError("matrix is not Hermitian within 1e-9")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w, v


def trace_norm(m) -> float:
    """Schatten-1 norm, used by trace_distance."""
    m = as_matrix(m)
    if is_hermitian(m):
        return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def hilbert_schmidt_norm(m) -> float:
    """Frobenius (Schatten-2) norm; not used by any convergence functional."""
    return float(np.linalg.norm(as_matrix(m), "fro"))


def purity(rho) -> float:
    m = as_matrix(rho)
    return float(np.real(np.trace(m @ m)))


def _check_same_dim(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def trace_distance(rho, sigma) -> float:
    a, b = as_matrix(rho), as_matrix(sigma)
    _check_same_dim(a, b)
    return 0.5 * trace_norm(a - b)


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(as_matrix(rho))
    w = w[w > SUPPORT_CUTOFF]
    return float(-np.sum(w * np.log(w)))


def relative_entropy(rho, sigma) -> float:
    """Umegaki relative entropy Tr[rho (ln rho - ln sigma)] in nats.

    Evaluated on the raw operators (no renormalisation).  Returns ``inf``
    when the support of ``rho`` is not contained in that of ``sigma``;
    eigenvalues at or below 1e-12 count as outside the support.
    """
    a, b = as_matrix(rho), as_matrix(sigma)
    _check_same_dim(a, b)
    p, u = eigendecompose_hermitian(a)
    q, v = eigendecompose_hermitian(b)
    keep = p > SUPPORT_CUTOFF
    p, u = p[keep], u[:, keep]
    if p.size == 0:
        return 0.0
    overlap = np.abs(u.conj().T @ v) ** 2  # overlap[i, j] = |<u_i|v_j>|^2
    in_support = q > SUPPORT_CUTOFF
    leak = float(p @ overlap[:, ~in_support].sum(axis=1)) if (~in_support).any() else 0.0
    if leak > SUPPORT_CUTOFF:
        return float("inf")
    cross = float(p @ (overlap[:, in_support] @ np.log(q[in_support])))
    return float(np.sum(p * np.log(p))) - cross


# -- random ensembles (for property tests and experiments) --------------------

def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure_state(dim: int, rng: np.random.Generator) -> PureState:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(v / np.linalg.norm(v))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random state G G^dagger / Tr from a dim x rank Ginibre matrix (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)
