"""Bipartite unitaries: named gates, embedding, Weyl operators and decompositions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InvalidDimensionError,
    LayoutError,
    NumericalValidityError,
    UnsupportedDimensionError,
)
from .qstate import SubsystemLayout, apply_local, hermitian_part

UNITARY_TOL = 1e-10
FILE_UNITARY_TOL = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (np.eye(2, dtype=complex), SIGMA_X, SIGMA_Y, SIGMA_Z)


def unitarity_error(matrix: np.ndarray) -> float:
    n = matrix.shape[0]
    return float(np.abs(matrix.conj().T @ matrix - np.eye(n)).max())


@dataclass(frozen=True, eq=False)
class BipartiteGate:
    """Unitary on A_U (dim ``d_a``) tensor B_U (dim ``d_b``), A_U the leading index."""

    d_a: int
    d_b: int
    matrix: np.ndarray = field(repr=False)
    tol: float = field(default=UNITARY_TOL, repr=False)

    def __post_init__(self):
        if self.d_a < 1 or self.d_b < 1:
            raise InvalidDimensionError(f"gate dimensions must be positive, got {(self.d_a, self.d_b)}")
        mat = np.array(self.matrix, dtype=complex)
        n = self.d_a * self.d_b
        if mat.shape != (n, n):
            raise LayoutError(f"gate matrix has shape {mat.shape}, expected {(n, n)}")
        err = unitarity_error(mat)
        if err > self.tol:
            raise NumericalValidityError(f"gate is not unitary (max |U^dag U - I| = {err:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.d_a * self.d_b

    def adjoint(self) -> "BipartiteGate":
        return BipartiteGate(self.d_a, self.d_b, self.matrix.conj().T)

    def then(self, other: "BipartiteGate") -> "BipartiteGate":
        """``other`` applied after ``self``, i.e. the product other @ self."""
        if (other.d_a, other.d_b) != (self.d_a, self.d_b):
            raise LayoutError("cannot compose gates of different dimensions")
        return BipartiteGate(self.d_a, self.d_b, other.matrix @ self.matrix)

    def __matmul__(self, other: "BipartiteGate") -> "BipartiteGate":
        return other.then(self)

    def swapped(self) -> "BipartiteGate":
        """The same physical gate with the roles of Alice and Bob exchanged."""
        t = self.matrix.reshape(self.d_a, self.d_b, self.d_a, self.d_b).transpose(1, 0, 3, 2)
        return BipartiteGate(self.d_b, self.d_a, t.reshape(self.dim, self.dim))

    def to_json(self) -> dict:
        return {
            "d_a": self.d_a,
            "d_b": self.d_b,
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
        }


def gate_from_json(doc: dict) -> BipartiteGate:
    """Parse the gate document format; unitarity is checked at 1e-8."""
    try:
        d_a, d_b = int(doc["d_a"]), int(doc["d_b"])
        rows = doc["matrix"]
        mat = np.array([[complex(float(re), float(im)) for re, im in row] for row in rows])
    except (KeyError, TypeError, ValueError) as exc:
        raise GateFormatError(f"malformed gate document: {exc}") from exc
    return BipartiteGate(d_a, d_b, mat, tol=FILE_UNITARY_TOL)


class GateFormatError(ValueError):
    pass


def load_gate(path: str | Path) -> BipartiteGate:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GateFormatError(f"{path}: not valid JSON ({exc})") from exc
    return gate_from_json(doc)


def save_gate(gate: BipartiteGate, path: str | Path) -> None:
    Path(path).write_text(json.dumps(gate.to_json()))


# ----------------------------------------------------------------------------
# named gates

def identity(d_a: int = 2, d_b: int | None = None) -> BipartiteGate:
    d_b = d_a if d_b is None else d_b
    return BipartiteGate(d_a, d_b, np.eye(d_a * d_b))


def swap(d: int = 2) -> BipartiteGate:
    mat = np.eye(d * d).reshape(d, d, d, d).transpose(0, 1, 3, 2).reshape(d * d, d * d)
    return BipartiteGate(d, d, mat)


def cnot() -> BipartiteGate:
    mat = np.eye(4)[[0, 1, 3, 2]]
    return BipartiteGate(2, 2, mat)


def cz() -> BipartiteGate:
    return BipartiteGate(2, 2, np.diag([1, 1, 1, -1]))


def gate_zz(alpha: float) -> BipartiteGate:
    """exp(i alpha sigma_z x sigma_z)."""
    phases = np.exp(1j * alpha * np.array([1, -1, -1, 1]))
    return BipartiteGate(2, 2, np.diag(phases))


def canonical_gate(alphas) -> BipartiteGate:
    """exp(-i sum_j alpha_j sigma_j x sigma_j)."""
    h = sum(a * np.kron(s, s) for a, s in zip(alphas, PAULIS[1:]))
    return BipartiteGate(2, 2, unitary_from_generator(-h))


def random_unitary(n: int, seed) -> np.ndarray:
    """Haar-random unitary: QR of a complex Gaussian matrix, R's diagonal phase-fixed."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_gate(d_a: int, d_b: int, seed) -> BipartiteGate:
    return BipartiteGate(d_a, d_b, random_unitary(d_a * d_b, seed))


def unitary_from_generator(h: np.ndarray) -> np.ndarray:
    """exp(iH) for Hermitian H, by eigendecomposition."""
    h = hermitian_part(h)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T


# ----------------------------------------------------------------------------
# Weyl operators

@dataclass(frozen=True, eq=False)
class WeylSet:
    """The d^2 operators X^a Z^b, listed with index j = a*d + b."""

    d: int
    operators: tuple[np.ndarray, ...] = field(repr=False)

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def __getitem__(self, j):
        return self.operators[j]


def shift_clock(d: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


def weyl_set(d: int) -> WeylSet:
    if d < 1:
        raise InvalidDimensionError(f"dimension must be positive, got {d}")
    x, z = shift_clock(d)
    ops = []
    for a in range(d):
        xa = np.linalg.matrix_power(x, a)
        for b in range(d):
            op = xa @ np.linalg.matrix_power(z, b)
            op.setflags(write=False)
            ops.append(op)
    return WeylSet(d, tuple(ops))


# ----------------------------------------------------------------------------
# embedding and operator-Schmidt decomposition

def embed(gate: BipartiteGate, layout: SubsystemLayout, a_label: str = "A_U", b_label: str = "B_U") -> np.ndarray:
    """Full matrix acting as ``gate`` on the A_U, B_U factors and identity elsewhere."""
    if layout.dim(a_label) != gate.d_a or layout.dim(b_label) != gate.d_b:
        raise LayoutError(
            f"gate dims {(gate.d_a, gate.d_b)} do not match layout factors "
            f"{a_label}={layout.dim(a_label)}, {b_label}={layout.dim(b_label)}"
        )
    n = layout.total_dim
    axes = layout.axes([a_label, b_label])
    cols = apply_local(gate.matrix, np.eye(n, dtype=complex), layout.dims, axes)
    return cols.T


def apply_gate(gate: BipartiteGate, vectors: np.ndarray, layout: SubsystemLayout,
               a_label: str = "A_U", b_label: str = "B_U") -> np.ndarray:
    """Apply the gate to raw amplitude vector(s) on ``layout`` without forming the embedding."""
    axes = layout.axes([a_label, b_label])
    return apply_local(gate.matrix, vectors, layout.dims, axes)


def realign(matrix: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    """U[(a b),(a' b')] -> R[(a a'),(b b')]; works on stacks of matrices."""
    batch = matrix.shape[:-2]
    t = matrix.reshape(batch + (d_a, d_b, d_a, d_b))
    nb = len(batch)
    t = t.transpose(tuple(range(nb)) + (nb, nb + 2, nb + 1, nb + 3))
    return t.reshape(batch + (d_a * d_a, d_b * d_b))


def operator_schmidt(gate: BipartiteGate) -> np.ndarray:
    """Operator-Schmidt coefficients (descending); their squares sum to d_a*d_b."""
    return np.linalg.svd(realign(gate.matrix, gate.d_a, gate.d_b), compute_uv=False)


# ----------------------------------------------------------------------------
# two-qubit canonical decomposition

# columns: Phi+, i Phi-, i Psi+, Psi-  (local SU(2)xSU(2) becomes real SO(4) here)
MAGIC = np.array(
    [[1, 1j, 0, 0],
     [0, 0, 1j, 1],
     [0, 0, 1j, -1],
     [1, -1j, 0, 0]],
    dtype=complex,
) / np.sqrt(2)

# sign of sigma_j x sigma_j on each magic basis vector: rows k, columns j
_MAGIC_SIGNS = np.real(
    np.array([np.diag(MAGIC.conj().T @ np.kron(s, s) @ MAGIC) for s in PAULIS[1:]])
).T


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """gate = global_phase * (after_a x after_b) U_d(alphas) (before_a x before_b).

    ``alphas`` follow the exp(-i sum alpha_j sigma_j x sigma_j) convention;
    ``alphas_plus`` gives the same interaction written as exp(+i ...).
    """

    alphas: np.ndarray
    local_before: tuple[np.ndarray, np.ndarray] = field(repr=False)
    local_after: tuple[np.ndarray, np.ndarray] = field(repr=False)
    global_phase: complex = 1.0

    @property
    def alphas_plus(self) -> np.ndarray:
        return -self.alphas

    def interaction(self) -> np.ndarray:
        return canonical_gate(self.alphas).matrix

    def reconstruct(self) -> np.ndarray:
        after = np.kron(*self.local_after)
        before = np.kron(*self.local_before)
        return self.global_phase * after @ self.interaction() @ before

    def residual(self, gate: BipartiteGate | np.ndarray) -> float:
        mat = gate.matrix if isinstance(gate, BipartiteGate) else gate
        return float(np.abs(self.reconstruct() - mat).max())


def _kron_factor(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a 4x4 product a x b into unitaries a, b (a absorbs the phase freedom)."""
    r = realign(w, 2, 2)
    u, s, vh = np.linalg.svd(r)
    a = (np.sqrt(s[0]) * u[:, 0]).reshape(2, 2)
    b = (np.sqrt(s[0]) * vh[0]).reshape(2, 2)
    scale = np.sqrt(abs(np.linalg.det(a)))
    a, b = a / scale, b * scale
    # nearest unitaries, to keep rounding out of later products
    ua, _, va = np.linalg.svd(a)
    ub, _, vb = np.linalg.svd(b)
    return ua @ va, ub @ vb


def _simultaneous_real_diagonalize(x: np.ndarray, y: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Real orthogonal P diagonalizing two commuting real symmetric matrices."""
    w, p = np.linalg.eigh(x)
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[start] < tol:
            stop += 1
        if stop - start > 1:
            block = p[:, start:stop]
            _, q = np.linalg.eigh(block.T @ y @ block)
            p[:, start:stop] = block @ q
        start = stop
    return p


def _raw_kak(u: np.ndarray):
    """Magic-basis KAK: u = phase * K1 . U_d(alphas) . K2 with K1, K2 local."""
    det = np.linalg.det(u)
    u_su = u / det ** 0.25
    up = MAGIC.conj().T @ u_su @ MAGIC
    m = up.T @ up
    # real and imaginary parts commute (m is unitary and symmetric)
    p = _simultaneous_real_diagonalize(
        (m.real + m.real.T) / 2, (m.imag + m.imag.T) / 2
    )
    if np.linalg.det(p) < 0:
        p[:, 0] = -p[:, 0]
    d = np.diag(p.T @ m @ p)
    theta = np.angle(d) / 2
    k1 = up @ p @ np.diag(np.exp(-1j * theta))
    if np.real(np.linalg.det(k1)) < 0:
        theta[0] += np.pi
        k1[:, 0] = -k1[:, 0]
    k1 = np.real(k1)
    # theta_k = -sum_j s_kj alpha_j ; columns of s are orthogonal with norm^2 4
    alphas = -(_MAGIC_SIGNS.T @ theta) / 4
    left = MAGIC @ k1 @ MAGIC.conj().T
    right = MAGIC @ p.T @ MAGIC.conj().T
    return alphas, _kron_factor(left), _kron_factor(right)


def _fold_to_chamber(alphas, after, before, atol: float = 1e-9):
    """Move alphas into pi/4 >= a1 >= a2 >= |a3| with compensating local Paulis/Cliffords."""
    a = list(map(float, alphas))
    a1, a2 = list(after), list(before)
    phase = 1.0 + 0j
    sig = PAULIS[1:]
    quarter = np.pi / 4

    def shift(j, k):
        # U_d(a) = U_d(a - k pi/2 e_j) (-i sigma_j x sigma_j)^k
        nonlocal phase
        a[j] -= k * np.pi / 2
        if k % 2:
            a2[0] = sig[j] @ a2[0]
            a2[1] = sig[j] @ a2[1]
            phase *= -1j
        if (k // 2) % 2:
            phase *= -1

    def negate_except(j):
        # conjugation by sigma_j x I flips the sign of the other two terms
        for i in range(3):
            if i != j:
                a[i] = -a[i]
        a1[0] = a1[0] @ sig[j]
        a2[0] = sig[j] @ a2[0]

    def swap(i, j):
        # V maps sigma_i <-> sigma_j (third up to sign); V x V conjugation permutes alphas
        v = (sig[i] + sig[j]) / np.sqrt(2)
        a[i], a[j] = a[j], a[i]
        a1[0], a1[1] = a1[0] @ v, a1[1] @ v
        a2[0], a2[1] = v.conj().T @ a2[0], v.conj().T @ a2[1]

    for j in range(3):
        k = int(np.floor((a[j] + quarter) / (np.pi / 2)))
        if k:
            shift(j, k)
    # selection sort via transpositions so the locals stay consistent
    for pos in range(3):
        best = max(range(pos, 3), key=lambda i: abs(a[i]) + (1e-15 * (3 - i)))
        if best != pos:
            swap(pos, best)
    if a[0] < 0 and a[1] < 0:
        negate_except(2)
    elif a[0] < 0:
        negate_except(1)
    elif a[1] < 0:
        negate_except(0)
    if a[0] > quarter - atol and a[2] < 0:
        # on the pi/4 face, (pi/4, a2, a3) ~ (pi/4, a2, -a3)
        shift(0, 1)
        negate_except(1)
    for j in range(3):
        if abs(a[j]) < 1e-14:
            a[j] = 0.0
    return np.array(a), tuple(a1), tuple(a2), phase


def kak_decompose(gate: BipartiteGate | np.ndarray) -> CanonicalForm:
    """Canonical form of a two-qubit gate with alphas in the Weyl chamber."""
    if isinstance(gate, BipartiteGate):
        if (gate.d_a, gate.d_b) != (2, 2):
            raise UnsupportedDimensionError(
                f"canonical decomposition needs 2x2 subsystems, got {(gate.d_a, gate.d_b)}"
            )
        mat = gate.matrix
    else:
        mat = np.asarray(gate, dtype=complex)
        if mat.shape != (4, 4):
            raise UnsupportedDimensionError(f"canonical decomposition needs a 4x4 matrix, got {mat.shape}")
    alphas, after, before = _raw_kak(mat)
    alphas, after, before, _ = _fold_to_chamber(alphas, after, before)
    form = CanonicalForm(alphas, before, after, 1.0)
    # the remaining scalar is fixed by comparing with the input
    core = form.reconstruct()
    phase = np.vdot(core, mat) / 4
    phase /= abs(phase)
    return CanonicalForm(alphas, before, after, complex(phase))
