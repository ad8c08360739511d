"""Holevo information and the explicit signalling ensembles built from entangling inputs.

Every ensemble here consists of pure states on one shared layout.  The gate
is only ever applied to the ``A_U``/``B_U`` factors, so operations on Bob's
extra register ``B_2`` commute with it by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidEnsembleError, LayoutError, PreconditionError
from .qstate import (
    StateVector,
    SubsystemLayout,
    apply_local,
    bipartite_entropy,
    matrix_entropy,
    max_entangled,
    reduced_matrix,
)
from .unitary import PAULIS, SIGMA_Y, BipartiteGate, apply_gate, weyl_set

CONDITION_TOL = 1e-9
PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Ensemble:
    members: tuple[tuple[float, StateVector], ...]

    def __init__(self, members: Iterable[tuple[float, StateVector]]):
        members = tuple((float(p), s) for p, s in members)
        if not members:
            raise InvalidEnsembleError("ensemble has no members")
        probs = np.array([p for p, _ in members])
        if (probs < 0).any() or abs(probs.sum() - 1) > PROB_TOL:
            raise InvalidEnsembleError(f"probabilities must be nonnegative and sum to 1, got sum {probs.sum()!r}")
        layout = members[0][1].layout
        if any(s.layout != layout for _, s in members):
            raise LayoutError("ensemble members live on different layouts")
        object.__setattr__(self, "members", members)

    @property
    def layout(self) -> SubsystemLayout:
        return self.members[0][1].layout

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.members])

    def amplitudes(self) -> np.ndarray:
        return np.stack([s.amplitudes for _, s in self.members])

    def __len__(self):
        return len(self.members)

    def evolve(self, gate: BipartiteGate, a_label: str = "A_U", b_label: str = "B_U") -> "Ensemble":
        """Apply the gate to every member."""
        out = apply_gate(gate, self.amplitudes(), self.layout, a_label, b_label)
        return Ensemble((p, StateVector(self.layout, v)) for p, v in zip(self.probabilities, out))

    def average(self, keep: Iterable[str]) -> np.ndarray:
        """Average reduced density matrix on ``keep``."""
        axes = self.layout.axes(self.layout.restrict(keep).labels)
        return sum(p * reduced_matrix(s.amplitudes, self.layout.dims, axes) for p, s in self.members)

    def to_records(self) -> list[dict]:
        return [{"probability": p, "amplitudes": s.to_records()} for p, s in self.members]


def holevo(ens: Ensemble, keep: Iterable[str]) -> float:
    """S(average reduced state) - sum_j p_j S(reduced member state), on the factors ``keep``."""
    if not isinstance(ens, Ensemble) or len(ens) == 0:
        raise InvalidEnsembleError("holevo needs a nonempty Ensemble")
    layout = ens.layout
    kept = layout.restrict(keep).labels
    axes = layout.axes(kept)
    s_avg = matrix_entropy(ens.average(kept))
    if len(kept) == len(layout.labels):
        member = np.zeros(len(ens))
    else:
        member = bipartite_entropy(ens.amplitudes(), layout.dims, axes)
    return max(0.0, float(s_avg - ens.probabilities @ member))


def average_entropy(ens: Ensemble, keep: Iterable[str]) -> float:
    return matrix_entropy(ens.average(keep))


# ----------------------------------------------------------------------------
# dense-coding ensembles

def _check_chi(gate: BipartiteGate, chi: StateVector, b_anc: int | None = None):
    labels = chi.layout.labels
    if labels != ("B_U", "B_anc") or chi.layout.dim("B_U") != gate.d_b:
        raise LayoutError(f"chi must live on (B_U={gate.d_b}, B_anc), got {chi.layout.factors}")
    if b_anc is not None and chi.layout.dim("B_anc") != b_anc:
        raise LayoutError(f"chi's B_anc must have dimension {b_anc}, got {chi.layout.dim('B_anc')}")


def dense_layout(gate: BipartiteGate, b_anc: int) -> SubsystemLayout:
    return SubsystemLayout([("A_U", gate.d_a), ("B_U", gate.d_b), ("B_anc", b_anc), ("B_2", gate.d_a)])


def ensemble_dense(gate: BipartiteGate, chi: StateVector) -> Ensemble:
    """{1/d_a^2, V_j^{A_U} |Psi>_{A_U B_2} |chi>_B} with V_j the Weyl operators.

    Layout ``(A_U, B_U, B_anc, B_2)``; apply ``.evolve(gate)`` for the final ensemble.
    """
    _check_chi(gate, chi, gate.d_b)
    layout = dense_layout(gate, chi.layout.dim("B_anc"))
    d = gate.d_a
    bell = max_entangled(d).amplitudes.reshape(d, d)  # (A_U, B_2)
    base = np.einsum("ax,bn->abnx", bell, chi.amplitudes.reshape(chi.layout.dims)).reshape(-1)
    members = []
    for v in weyl_set(d):
        amps = apply_local(v, base, layout.dims, [0])
        members.append((1 / d**2, StateVector(layout, amps)))
    return Ensemble(members)


BOB_SIDE = ("B_U", "B_anc", "B_2")


def ensemble_dense_delta(gate: BipartiteGate, u0: np.ndarray) -> tuple[Ensemble, float]:
    """{1/d_a^2, U_0 V_j^{A_U} |Psi>_{A_U B_2} |Psi>_B} and its Holevo gain on Bob's side under the gate.

    Returns the initial ensemble and chi(U . ens) - chi(ens) on ``(B_U, B_anc, B_2)``.
    """
    u0 = np.asarray(u0, dtype=complex)
    u0_gate = BipartiteGate(gate.d_a, gate.d_b, u0)
    chi = StateVector(SubsystemLayout([("B_U", gate.d_b), ("B_anc", gate.d_b)]), max_entangled(gate.d_b).amplitudes)
    initial = ensemble_dense(gate, chi).evolve(u0_gate)
    final = initial.evolve(gate)
    gain = holevo(final, BOB_SIDE) - holevo(initial, BOB_SIDE)
    return initial, float(gain)


def phased_layout(gate: BipartiteGate, a_anc: int, b_anc: int) -> SubsystemLayout:
    return SubsystemLayout([
        ("A_anc", a_anc), ("A_U", gate.d_a), ("B_U", gate.d_b), ("B_anc", b_anc), ("B_2", gate.d_a**2),
    ])


def ensemble_phased(gate: BipartiteGate, chi: StateVector, phi: StateVector | None = None,
                    va: Sequence[np.ndarray] | None = None, vb: Sequence[np.ndarray] | None = None) -> Ensemble:
    """Members (1/d_a) sum_j e^{2 pi i k j / d_a^2} V_j^A |phi>_A V_j^B |chi>_B |j>_{B_2}, k = 0..d_a^2-1.

    By default ``phi`` is |Psi> on (A_anc, A_U), ``va`` the Weyl operators on
    A_anc and ``vb`` identities.  Custom ``va`` act on the whole of Alice's
    side, ``vb`` on the whole of Bob's (B_U, B_anc).
    """
    _check_chi(gate, chi)
    d = gate.d_a
    n = d * d
    if phi is None:
        phi = StateVector(SubsystemLayout([("A_anc", d), ("A_U", d)]), max_entangled(d).amplitudes)
    if phi.layout.labels != ("A_anc", "A_U") or phi.layout.dim("A_U") != d:
        raise LayoutError(f"phi must live on (A_anc, A_U={d}), got {phi.layout.factors}")
    a_anc = phi.layout.dim("A_anc")
    d_alice = phi.layout.total_dim
    d_bob = chi.layout.total_dim
    if va is None:
        va = [np.kron(w, np.eye(d)) for w in weyl_set(a_anc)] if a_anc == d else None
        if va is None:
            raise LayoutError("default Weyl operators need dim(A_anc) == dim(A_U)")
    if vb is None:
        vb = [np.eye(d_bob)] * n
    if len(va) != n or len(vb) != n:
        raise LayoutError(f"need {n} operators on each side, got {len(va)} and {len(vb)}")
    layout = phased_layout(gate, a_anc, chi.layout.dim("B_anc"))
    # terms[j] = V_j^A|phi> (x) V_j^B|chi> (x) |j>
    alice = np.stack([np.asarray(v) @ phi.amplitudes for v in va])
    bob = np.stack([np.asarray(v) @ chi.amplitudes for v in vb])
    if alice.shape[1] != d_alice or bob.shape[1] != d_bob:
        raise LayoutError("operator dimensions do not match phi/chi")
    phases = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)  # [k, j]
    members = []
    for k in range(n):
        amps = np.einsum("j,ja,jb,jc->abc", phases[k], alice, bob, np.eye(n)).reshape(-1) / d
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > CONDITION_TOL:
            raise PreconditionError("phased member is not normalized; the V_j^A|phi> are not orthonormal",
                                    abs(norm - 1))
        members.append((1 / n, StateVector(layout, amps / norm)))
    return Ensemble(members)


# ----------------------------------------------------------------------------
# condition checks

@dataclass
class ConditionReport:
    gram_residual: float = 0.0
    intertwine_residual: float = 0.0
    satisfied: bool = field(init=False)

    def __post_init__(self):
        self.satisfied = self.gram_residual < CONDITION_TOL and self.intertwine_residual < CONDITION_TOL


def check_con1(v_list: Sequence[np.ndarray], phi: StateVector | np.ndarray) -> float:
    """max of |Gram(V_j|phi>) - I| and |sum_j V_j|phi><phi|V_j^dag - I| (entrywise)."""
    amps = phi.amplitudes if isinstance(phi, StateVector) else np.asarray(phi, dtype=complex)
    vecs = np.stack([np.asarray(v) @ amps for v in v_list])
    n = amps.size
    gram = vecs.conj() @ vecs.T
    resolution = vecs.T @ vecs.conj()
    return float(max(np.abs(gram - np.eye(len(vecs))).max(), np.abs(resolution - np.eye(n)).max()))


def _embed_pair(op_a, op_b, gate_mat, d_a, d_b):
    """Full-space matrices for op_a x op_b and for the gate on (A_U, B_U)."""
    op_a, op_b = np.asarray(op_a), np.asarray(op_b)
    na = op_a.shape[0] // d_a
    nb = op_b.shape[0] // d_b
    if na * d_a != op_a.shape[0] or nb * d_b != op_b.shape[0]:
        raise LayoutError("local operator dimensions are not multiples of the gate dimensions")
    full = np.kron(np.kron(np.eye(na), gate_mat), np.eye(nb))
    return np.kron(op_a, op_b), full


def check_con2(gate: BipartiteGate, va, vb, ua, ub) -> float:
    """max_j |U (V_j^A x V_j^B) - (U_j^A x U_j^B) U| (entrywise).

    Alice's operators act on (A_anc, A_U), Bob's on (B_U, B_anc); the ancilla
    sizes are inferred from the operator dimensions.
    """
    if not (len(va) == len(vb) == len(ua) == len(ub)):
        raise LayoutError("operator lists must have equal length")
    worst = 0.0
    for a, b, c, e in zip(va, vb, ua, ub):
        lhs_local, full = _embed_pair(a, b, gate.matrix, gate.d_a, gate.d_b)
        rhs_local, _ = _embed_pair(c, e, gate.matrix, gate.d_a, gate.d_b)
        worst = max(worst, float(np.abs(full @ lhs_local - rhs_local @ full).max()))
    return worst


check_con4 = check_con2


def check_con3(v_list: Sequence[np.ndarray]) -> float:
    """Deviation of rho -> sum_j V_j^dag rho V_j from (n/d) Tr(rho) I, over all matrix units."""
    d = np.asarray(v_list[0]).shape[0]
    n = len(v_list)
    worst = 0.0
    for a in range(d):
        for b in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[a, b] = 1
            twirl = sum(np.asarray(v).conj().T @ unit @ np.asarray(v) for v in v_list)
            target = (n / d) * (a == b) * np.eye(d)
            worst = max(worst, float(np.abs(twirl - target).max()))
    return worst


def pauli_set() -> list[np.ndarray]:
    return [p.copy() for p in PAULIS]


# ----------------------------------------------------------------------------
# two-qubit construction for non-maximally entangled inputs

@dataclass(frozen=True)
class VjkSets:
    va: tuple[np.ndarray, ...]
    vb: tuple[np.ndarray, ...]
    lambdas: tuple[float, float]
    overlap: float


@dataclass(frozen=True)
class NotRepresentable:
    """The input cannot be written with a real overlap <psi_0|psi_1>, so no unitary swaps them."""

    overlap: complex


def phicon_form(phi: StateVector):
    """Split phi = l0 |psi0>|0> + l1 |psi1>|1> (A_U computational basis), l_i >= 0.

    A vanishing branch gets a state orthogonal to the other one.
    """
    if phi.layout.labels != ("A_anc", "A_U") or phi.layout.dims != (2, 2):
        raise LayoutError(f"phi must live on (A_anc=2, A_U=2), got {phi.layout.factors}")
    cols = phi.amplitudes.reshape(2, 2).T  # cols[i] = unnormalized A_anc state paired with |i>
    lam = np.linalg.norm(cols, axis=1)
    psis = [None, None]
    for i in range(2):
        if lam[i] > 1e-12:
            psis[i] = cols[i] / lam[i]
    for i in range(2):
        if psis[i] is None:
            other = psis[1 - i] if psis[1 - i] is not None else np.array([1, 0], dtype=complex)
            psis[i] = np.array([-np.conj(other[1]), np.conj(other[0])])
    return lam, psis[0], psis[1]


def two_qubit_vjk(phi: StateVector, b_anc: int = 2, tol: float = 1e-9) -> VjkSets | NotRepresentable:
    """V^A_{jk} = V_b^k V_a^j x sigma_y^j on (A_anc, A_U) and V^B_{jk} = sigma_y^j x I on (B_U, B_anc).

    V_a swaps psi_0 and psi_1, V_b maps each psi_i to a perpendicular state.
    Order of the returned lists: (j, k) = (0,0), (0,1), (1,0), (1,1).
    """
    lam, psi0, psi1 = phicon_form(phi)
    r = np.vdot(psi0, psi1)
    if abs(r.imag) > tol:
        return NotRepresentable(complex(r))
    r = float(np.clip(r.real, -1, 1))
    # orthonormal basis (psi0, e) with psi1 = r psi0 + s e, s >= 0
    rest = psi1 - r * psi0
    s = np.linalg.norm(rest)
    e = rest / s if s > 1e-12 else np.array([-np.conj(psi0[1]), np.conj(psi0[0])])
    s = float(np.sqrt(max(0.0, 1 - r * r)))
    basis = np.stack([psi0, e], axis=1)
    v_a = basis @ np.array([[r, s], [s, -r]]) @ basis.conj().T
    # a quarter-turn in the real (psi0, e) plane sends both states to perpendicular ones;
    # when psi0, psi1 are parallel or orthogonal the reflection also does, and is the
    # conventional choice (it gives V_b = X for the maximally entangled input)
    turn = [[0, 1], [1, 0]] if abs(r * s) < tol else [[0, -1], [1, 0]]
    v_b = basis @ np.array(turn) @ basis.conj().T
    va, vb = [], []
    for j in range(2):
        for k in range(2):
            left = np.linalg.matrix_power(v_b, k) @ np.linalg.matrix_power(v_a, j)
            sy = np.linalg.matrix_power(SIGMA_Y, j)
            va.append(np.kron(left, sy))
            vb.append(np.kron(sy, np.eye(b_anc)))
    return VjkSets(tuple(va), tuple(vb), (float(lam[0]), float(lam[1])), r)


# ----------------------------------------------------------------------------
# ensemble for the increase in Holevo information under U^dagger

def delta_ensemble_con34(gate: BipartiteGate, psi: StateVector, va, vb, ua, ub) -> float:
    """Holevo gain on Alice's side when U^dagger acts on {1/d_a^2, (U_j^A x U_j^B)^dagger |psi>}.

    ``psi`` lives on (A_anc, A_U, B_U, B_anc); all operator lists act on A_U or
    B_U.  Requires the twirl condition on ``va`` and the intertwining
    condition U (V_j^A x V_j^B) = (U_j^A x U_j^B) U; otherwise raises
    ``PreconditionError``.
    """
    if psi.layout.labels != ("A_anc", "A_U", "B_U", "B_anc"):
        raise LayoutError(f"psi must live on (A_anc, A_U, B_U, B_anc), got {psi.layout.labels}")
    r3 = check_con3(va)
    if r3 >= CONDITION_TOL:
        raise PreconditionError("twirl condition on V^A fails", r3)
    r4 = check_con4(gate, va, vb, ua, ub)
    if r4 >= CONDITION_TOL:
        raise PreconditionError("intertwining condition fails", r4)
    layout = psi.layout
    n = len(ua)
    members = []
    for a, b in zip(ua, ub):
        op = np.kron(np.asarray(a), np.asarray(b)).conj().T
        members.append((1 / n, StateVector(layout, apply_local(op, psi.amplitudes, layout.dims, [1, 2]))))
    ens = Ensemble(members)
    alice = ("A_anc", "A_U")
    return float(holevo(ens.evolve(gate.adjoint()), alice) - holevo(ens, alice))
