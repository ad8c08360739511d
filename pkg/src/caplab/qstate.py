"""States, density operators, partial traces and entropies over labelled subsystems.

Composite indices are row-major over the factor order of a ``SubsystemLayout``:
the leftmost factor is the most significant digit.  Every module in the
package relies on this convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidCutError,
    InvalidDimensionError,
    LayoutError,
    NumericalValidityError,
)

# eigenvalues below this contribute nothing to an entropy (0 log 0 = 0)
EIG_CUTOFF = 1e-12
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
ANTI_HERMITIAN_REJECT = 1e-9
NEG_EIG_TOL = 1e-10


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered, labelled tensor factorization of a Hilbert space."""

    factors: tuple[tuple[str, int], ...]

    def __init__(self, factors: Iterable[tuple[str, int]]):
        factors = tuple((str(label), int(dim)) for label, dim in factors)
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate factor labels in {labels}")
        for label, dim in factors:
            if dim < 1:
                raise InvalidDimensionError(f"factor {label!r} has dimension {dim}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, **dims: int) -> "SubsystemLayout":
        """``SubsystemLayout.of(A=2, B=3)``; keyword order is factor order."""
        return cls(dims.items())

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown factor label {label!r}; layout has {self.labels}") from None

    def axes(self, labels: Iterable[str]) -> list[int]:
        return [self.axis(label) for label in labels]

    def dim(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def dim_of(self, labels: Iterable[str]) -> int:
        return int(np.prod([self.dim(label) for label in labels], dtype=np.int64))

    def restrict(self, labels: Iterable[str]) -> "SubsystemLayout":
        """Sub-layout on ``labels``, keeping this layout's factor order."""
        keep = set(labels)
        unknown = keep.difference(self.labels)
        if unknown:
            raise LayoutError(f"unknown factor labels {sorted(unknown)}; layout has {self.labels}")
        return SubsystemLayout((label, dim) for label, dim in self.factors if label in keep)

    def complement(self, labels: Iterable[str]) -> tuple[str, ...]:
        labels = set(labels)
        unknown = labels.difference(self.labels)
        if unknown:
            raise LayoutError(f"unknown factor labels {sorted(unknown)}; layout has {self.labels}")
        return tuple(label for label in self.labels if label not in labels)

    def __add__(self, other: "SubsystemLayout") -> "SubsystemLayout":
        return SubsystemLayout(self.factors + other.factors)


@dataclass(frozen=True, eq=False)
class StateVector:
    layout: SubsystemLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.layout.total_dim:
            raise LayoutError(
                f"amplitude vector has length {amps.shape[0]}, layout needs {self.layout.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > NORM_TOL:
            raise NumericalValidityError(f"state vector norm is {norm!r}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, layout: SubsystemLayout, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(layout, amps / np.linalg.norm(amps))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per factor."""
        return self.amplitudes.reshape(self.layout.dims)

    def density(self) -> "DensityOperator":
        return DensityOperator(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def kron(self, other: "StateVector") -> "StateVector":
        return StateVector(self.layout + other.layout, np.kron(self.amplitudes, other.amplitudes))

    def transpose_to(self, labels: Sequence[str]) -> "StateVector":
        """Same state with the factors reordered to ``labels``."""
        if sorted(labels) != sorted(self.layout.labels):
            raise LayoutError(f"{list(labels)} is not a permutation of {self.layout.labels}")
        perm = self.layout.axes(labels)
        layout = SubsystemLayout((label, self.layout.dim(label)) for label in labels)
        return StateVector(layout, self.tensor().transpose(perm).reshape(-1))

    def to_records(self) -> list[list[float]]:
        return [[float(a.real), float(a.imag)] for a in self.amplitudes]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    layout: SubsystemLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        n = self.layout.total_dim
        if mat.shape != (n, n):
            raise LayoutError(f"density matrix has shape {mat.shape}, layout needs {(n, n)}")
        if np.abs(mat - mat.conj().T).max(initial=0.0) > HERMITIAN_TOL:
            raise NumericalValidityError("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1) > NORM_TOL:
            raise NumericalValidityError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(mat).min() < -NEG_EIG_TOL:
            raise NumericalValidityError("density matrix has a negative eigenvalue")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def maximally_mixed(cls, layout: SubsystemLayout) -> "DensityOperator":
        n = layout.total_dim
        return cls(layout, np.eye(n) / n)

    def kron(self, other: "DensityOperator") -> "DensityOperator":
        return DensityOperator(self.layout + other.layout, np.kron(self.matrix, other.matrix))


# ----------------------------------------------------------------------------
# array-level kernels, shared with the optimizers

def entropy_from_probs(p: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits along the last axis; entries below cutoff count as 0."""
    p = np.asarray(p, dtype=float)
    safe = np.where(p > EIG_CUTOFF, p, 1.0)
    return -np.sum(np.where(p > EIG_CUTOFF, p * np.log2(safe), 0.0), axis=-1)


def bipartite_entropy(vectors: np.ndarray, dims: Sequence[int], cut_axes: Sequence[int]) -> np.ndarray:
    """Entanglement entropy across ``cut_axes`` : rest, for a stack of normalized vectors.

    ``vectors`` has shape ``(..., prod(dims))``.  Uses singular values of the
    matricized state, so no density matrix is formed.
    """
    dims = tuple(dims)
    batch = vectors.shape[:-1]
    cut_axes = list(cut_axes)
    rest = [i for i in range(len(dims)) if i not in cut_axes]
    nb = len(batch)
    t = vectors.reshape(batch + dims)
    t = t.transpose(list(range(nb)) + [nb + i for i in cut_axes + rest])
    dcut = int(np.prod([dims[i] for i in cut_axes], dtype=np.int64))
    m = t.reshape(batch + (dcut, -1))
    s = np.linalg.svd(m, compute_uv=False)
    return entropy_from_probs(s**2)


def apply_local(op: np.ndarray, vectors: np.ndarray, dims: Sequence[int], axes: Sequence[int]) -> np.ndarray:
    """Apply ``op`` (acting on the factors ``axes``, in that order) to a stack of vectors.

    ``op`` may itself be a stack with the same leading batch shape as ``vectors``.
    """
    dims = tuple(dims)
    axes = list(axes)
    batch = vectors.shape[:-1]
    nb = len(batch)
    sub = [dims[i] for i in axes]
    others = [i for i in range(len(dims)) if i not in axes]
    t = vectors.reshape(batch + dims)
    # move acted-on axes to the end, contract, and move them back
    perm = list(range(nb)) + [nb + i for i in others + axes]
    t = t.transpose(perm).reshape(batch + (-1, int(np.prod(sub, dtype=np.int64))))
    opm = op.reshape(op.shape[:-2] + (op.shape[-2], op.shape[-1]))
    if opm.ndim == 2:
        t = t @ opm.T
    else:
        t = np.einsum("...ij,...rj->...ri", opm, t)
    t = t.reshape(batch + tuple(dims[i] for i in others) + tuple(sub))
    inv = np.argsort(others + axes)
    t = t.transpose(list(range(nb)) + [nb + i for i in inv])
    return t.reshape(batch + (-1,))


def reduced_matrix(vector: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure state vector on ``keep_axes`` (order preserved)."""
    dims = tuple(dims)
    keep_axes = sorted(keep_axes)
    rest = [i for i in range(len(dims)) if i not in keep_axes]
    dk = int(np.prod([dims[i] for i in keep_axes], dtype=np.int64))
    m = vector.reshape(dims).transpose(keep_axes + rest).reshape(dk, -1)
    return m @ m.conj().T


def _trace_out(matrix: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    dims = tuple(dims)
    n = len(dims)
    keep_axes = sorted(keep_axes)
    traced = [i for i in range(n) if i not in keep_axes]
    t = matrix.reshape(dims + dims)
    t = t.transpose(keep_axes + traced + [n + i for i in keep_axes] + [n + i for i in traced])
    dk = int(np.prod([dims[i] for i in keep_axes], dtype=np.int64))
    dt = int(np.prod([dims[i] for i in traced], dtype=np.int64))
    return np.einsum("ajbj->ab", t.reshape(dk, dt, dk, dt))


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    """Symmetrize, rejecting matrices whose anti-Hermitian part is not negligible."""
    matrix = np.asarray(matrix, dtype=complex)
    anti = np.abs(matrix - matrix.conj().T).max(initial=0.0) / 2
    if anti > ANTI_HERMITIAN_REJECT:
        raise NumericalValidityError(f"matrix is not Hermitian (anti-Hermitian part {anti:.3e})")
    return (matrix + matrix.conj().T) / 2


def matrix_entropy(matrix: np.ndarray) -> float:
    """Von Neumann entropy (bits) of a raw density matrix."""
    evals = np.linalg.eigvalsh(hermitian_part(matrix))
    return float(entropy_from_probs(evals))


# ----------------------------------------------------------------------------
# public operations

def max_entangled(d: int, labels: tuple[str, str] = ("A", "B")) -> StateVector:
    """Normalized maximally entangled state (1/sqrt(d)) sum_j |jj>."""
    if d < 1:
        raise InvalidDimensionError(f"dimension must be positive, got {d}")
    layout = SubsystemLayout([(labels[0], d), (labels[1], d)])
    return StateVector(layout, np.eye(d).reshape(-1) / np.sqrt(d))


def basis_state(layout: SubsystemLayout, index: int = 0) -> StateVector:
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[index] = 1
    return StateVector(layout, amps)


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    keep = set(keep)
    sub = rho.layout.restrict(keep)
    if sub.labels == rho.layout.labels:
        return rho
    red = _trace_out(rho.matrix, rho.layout.dims, rho.layout.axes(sub.labels))
    return DensityOperator(sub, (red + red.conj().T) / 2)


def von_neumann_entropy(rho: DensityOperator | np.ndarray) -> float:
    """-Tr(rho log2 rho), ignoring eigenvalues below 1e-12."""
    matrix = rho.matrix if isinstance(rho, DensityOperator) else rho
    return matrix_entropy(matrix)


def entanglement_entropy(psi: StateVector, cut: Iterable[str]) -> float:
    """Entropy of the reduced state on ``cut`` (equivalently on its complement)."""
    cut = set(cut)
    labels = psi.layout.labels
    if not cut or not cut.issubset(labels) or cut == set(labels):
        if not cut.issubset(labels):
            raise LayoutError(f"unknown factor labels {sorted(cut - set(labels))}")
        raise InvalidCutError(f"cut {sorted(cut)} must be a nonempty proper subset of {labels}")
    axes = psi.layout.axes(label for label in labels if label in cut)
    return float(bipartite_entropy(psi.amplitudes, psi.layout.dims, axes))


def random_state(layout: SubsystemLayout, seed: int | np.random.Generator) -> StateVector:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    rng = np.random.default_rng(seed)
    n = layout.total_dim
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return StateVector.normalized(layout, z)


def random_density(layout: SubsystemLayout, seed: int | np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random density operator (Hilbert-Schmidt measure for full rank)."""
    rng = np.random.default_rng(seed)
    n = layout.total_dim
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityOperator(layout, rho / np.trace(rho).real)
