"""The channel A_U -> B induced by a gate and a fixed input on Bob's side.

Phi_chi(rho) = Tr_{A_U}[U (rho x |chi><chi|) U^dag], with entanglement-assisted
capacity max_rho S(rho) + S(Phi(rho)) - S((Phi x id)(purification of rho)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .capacities import CapacityReport, e_u_psi_onesided
from .errors import LayoutError
from .optimize import OptimizerConfig, from_state, multistart_maximize, to_states
from .qstate import (
    DensityOperator,
    StateVector,
    SubsystemLayout,
    bipartite_entropy,
    entropy_from_probs,
    matrix_entropy,
    max_entangled,
)
from .unitary import BipartiteGate

KRAUS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class InducedChannel:
    gate: BipartiteGate
    chi: StateVector
    kraus: tuple[np.ndarray, ...] = field(repr=False)
    # isometry A_U -> (A_U out, B_U, B_anc), i.e. the Stinespring dilation
    dilation: np.ndarray = field(repr=False)

    @property
    def d_in(self) -> int:
        return self.gate.d_a

    @property
    def d_out(self) -> int:
        return self.chi.layout.total_dim

    @property
    def output_layout(self) -> SubsystemLayout:
        return self.chi.layout


def induce_channel(gate: BipartiteGate, chi: StateVector) -> InducedChannel:
    """Kraus operators K_i = (<i|_{A_U} x I_B) U (I_{A_U} x |chi>)."""
    if chi.layout.labels != ("B_U", "B_anc") or chi.layout.dim("B_U") != gate.d_b:
        raise LayoutError(f"chi must live on (B_U={gate.d_b}, B_anc), got {chi.layout.factors}")
    nb = chi.layout.dim("B_anc")
    u_full = np.kron(gate.matrix, np.eye(nb))
    # columns: U (|a> x |chi>)
    inject = np.kron(np.eye(gate.d_a), chi.amplitudes.reshape(-1, 1))
    w = u_full @ inject
    kraus = tuple(w.reshape(gate.d_a, gate.d_b * nb, gate.d_a)[i] for i in range(gate.d_a))
    completeness = sum(k.conj().T @ k for k in kraus)
    if np.abs(completeness - np.eye(gate.d_a)).max() > KRAUS_TOL:
        raise LayoutError("induced Kraus operators are not trace preserving")
    return InducedChannel(gate, chi, kraus, w)


def apply_channel(ch: InducedChannel, rho: DensityOperator | np.ndarray) -> DensityOperator:
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    out = sum(k @ mat @ k.conj().T for k in ch.kraus)
    return DensityOperator(ch.output_layout, (out + out.conj().T) / 2)


def apply_channel_direct(ch: InducedChannel, rho: DensityOperator | np.ndarray) -> np.ndarray:
    """Tr_{A_U}[U (rho x |chi><chi|) U^dag] built from the full joint state."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    nb = ch.chi.layout.dim("B_anc")
    u_full = np.kron(ch.gate.matrix, np.eye(nb))
    joint = u_full @ np.kron(mat, np.outer(ch.chi.amplitudes, ch.chi.amplitudes.conj())) @ u_full.conj().T
    d_a, d_b = ch.d_in, ch.d_out
    return np.einsum("ajak->jk", joint.reshape(d_a, d_b, d_a, d_b))


def purification(rho: np.ndarray) -> np.ndarray:
    """|psi> = sum_i sqrt(l_i) |e_i>|i> on (A_U, R), eigenvector phases fixed.

    Each eigenvector is rotated so its largest-magnitude component is real
    and positive.
    """
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    w = np.clip(w, 0, None)
    idx = np.argmax(np.abs(v), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    v = v * (np.abs(ph) / ph)
    return (v * np.sqrt(w)).reshape(-1)


def _objective_terms(ch: InducedChannel, rho: np.ndarray) -> tuple[float, float, float]:
    d = ch.d_in
    psi = purification(rho).reshape(d, d)  # (A_U, R)
    s_in = matrix_entropy(rho)
    out = sum(k @ rho @ k.conj().T for k in ch.kraus)
    s_out = matrix_entropy(out)
    joint = np.stack([k @ psi for k in ch.kraus])  # (i, B, R): Kraus index stays unobserved
    # (Phi x id)(psi) = sum_i joint_i joint_i^dag on (B, R)
    flat = joint.reshape(len(ch.kraus), -1)
    s_joint = matrix_entropy(flat.T @ flat.conj())
    return s_in, s_out, s_joint


def ce_objective(ch: InducedChannel, rho: DensityOperator | np.ndarray) -> float:
    """Quantum mutual information S(rho) + S(Phi(rho)) - S((Phi x id)(|psi><psi|))."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    s_in, s_out, s_joint = _objective_terms(ch, mat)
    return float(s_in + s_out - s_joint)


def ce_objective_stinespring(ch: InducedChannel, rho: DensityOperator | np.ndarray) -> float:
    """Same quantity through the dilation: the joint output entropy equals the environment's."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    d = ch.d_in
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    psi = (v * np.sqrt(np.clip(w, 0, None))).reshape(-1)
    # (V x I_R)|psi> on (E = A_U, B, R)
    full = np.einsum("xa,ar->xr", ch.dilation, psi.reshape(d, d)).reshape(-1)
    dims = (d, ch.d_out, d)
    s_env = float(bipartite_entropy(full, dims, [0]))
    s_out = float(bipartite_entropy(full, dims, [1]))
    s_in = float(entropy_from_probs(np.clip(w, 0, None)))
    return s_in + s_out - s_env


def _rho_from_params(x: np.ndarray, d: int) -> np.ndarray:
    """rho = L L^dag / Tr(L L^dag) with L complex lower-triangular, for a stack of parameter rows."""
    il = np.tril_indices(d)
    k = len(il[0])
    batch = x.shape[:-1]
    low = np.zeros(batch + (d, d), dtype=complex)
    low[..., il[0], il[1]] = x[..., :k] + 1j * x[..., k:2 * k]
    rho = low @ np.conj(np.swapaxes(low, -1, -2))
    return rho / np.trace(rho, axis1=-2, axis2=-1).real[..., None, None]


def _identity_params(d: int) -> np.ndarray:
    il = np.tril_indices(d)
    re = (il[0] == il[1]).astype(float)
    return np.concatenate([re, np.zeros_like(re)])


def _batched_objective(kraus: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """ce_objective for a stack of density matrices.

    ``kraus`` has shape (r, d_out, d), or (m, r, d_out, d) with one set per density matrix.
    """
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0, None)
    s_in = entropy_from_probs(w)
    psi = v * np.sqrt(w)[..., None, :]  # (m, A_U, R)
    joint = np.einsum("...ibx,...xr->...ibr", kraus, psi)
    m, r = joint.shape[:2]
    out = np.einsum("mibr,micr->mbc", joint, joint.conj())
    s_out = entropy_from_probs(np.linalg.eigvalsh(out))
    flat = joint.reshape(m, r, -1)
    # nonzero spectrum of sum_i |j_i><j_i| equals that of the r x r Gram matrix
    gram = flat.conj() @ np.swapaxes(flat, -1, -2)
    s_joint = entropy_from_probs(np.linalg.eigvalsh(gram))
    return s_in + s_out - s_joint


def ce_capacity(ch: InducedChannel, config: OptimizerConfig | None = None) -> CapacityReport:
    """Entanglement-assisted capacity: concave ascent in rho, started at the maximally mixed state."""
    config = config or OptimizerConfig()
    d = ch.d_in
    kraus = np.stack(ch.kraus)
    n_params = d * (d + 1)

    def f(x):
        return _batched_objective(kraus, _rho_from_params(x, d))

    # concavity makes one start enough; a couple of random ones only cross-check
    sub = OptimizerConfig(restarts=min(config.restarts, 2), max_iterations=config.max_iterations,
                          tolerance=config.tolerance, seed=config.seed, agreement=config.agreement)
    res = multistart_maximize(f, n_params, sub, [_identity_params(d)])
    rho = _rho_from_params(res.x, d)
    report = CapacityReport(
        name="ce_capacity", value=max(0.0, float(res.value)), converged=res.converged,
        restarts_used=sub.restarts + 1,
    )
    report.extra["rho"] = (rho + rho.conj().T) / 2
    return report


def chi_c_lower_bound(gate: BipartiteGate, config: OptimizerConfig | None = None,
                      chi_start: np.ndarray | None = None) -> CapacityReport:
    """sup over |chi> of C_E(Phi_chi), searched jointly over (chi, rho).

    The one-sided capacity's optimal chi is always among the starting points
    (computed here unless ``chi_start`` is given), which pins the result at
    or above E_U^{Psi,->}.
    """
    config = config or OptimizerConfig()
    d_a, d_b = gate.d_a, gate.d_b
    nb = config.ancilla("B_anc", d_b)
    dc = d_b * nb
    if chi_start is None:
        chi_start = e_u_psi_onesided(gate, "->", config).extra["free_state"]
    u_full = np.kron(gate.matrix, np.eye(nb))
    k_rho = d_a * (d_a + 1)

    def kraus_batch(chis):
        # U_full (I x |chi>) per row, reshaped to (batch, i, out, in)
        batch = chis.shape[0]
        inject = np.einsum("ax,mc->maxc", np.eye(d_a), chis)
        inject = inject.reshape(batch, d_a, d_a * dc).transpose(0, 2, 1)
        return (u_full @ inject).reshape(batch, d_a, dc, d_a)

    def f(x):
        chis = to_states(x[:, :2 * dc], dc)
        rho = _rho_from_params(x[:, 2 * dc:], d_a)
        return _batched_objective(kraus_batch(chis), rho)

    ident = _identity_params(d_a)
    inits = [np.concatenate([from_state(chi_start), ident])]
    if nb == d_b:
        inits.append(np.concatenate([from_state(max_entangled(d_b).amplitudes), ident]))

    def sampler(rng):
        return np.concatenate([rng.standard_normal(2 * dc), rng.standard_normal(k_rho)])

    res = multistart_maximize(f, 2 * dc + k_rho, config, inits, sampler=sampler)
    chi = StateVector(SubsystemLayout([("B_U", d_b), ("B_anc", nb)]), to_states(res.x[:2 * dc], dc))
    # polish the inner concave problem at the best chi
    inner = ce_capacity(induce_channel(gate, chi), config)
    value = max(float(res.value), inner.value)
    report = CapacityReport(
        name="chi_c_lower_bound", value=max(0.0, value), argmax_state=chi,
        converged=res.converged, restarts_used=config.restarts + len(inits),
        ancilla_dims={"B_anc": nb},
    )
    report.extra["rho"] = inner.extra["rho"]
    return report
