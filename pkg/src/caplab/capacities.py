"""Entangling capacities of bipartite unitaries.

Exact: the Jamiolkowski capacity ``e_u_psi``.  Optimized (certified lower
bounds on the suprema): ``e_u``, ``delta_e_u``, ``delta_e_u_psi`` and the
one-sided variants where one party's input is frozen at the maximally
entangled state.

All computations use the layout ``(A_anc, A_U, B_U, B_anc)``.  Unless
overridden through ``OptimizerConfig.ancilla_dims``, each optimized side gets
an ancilla as large as the system it accompanies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LayoutError, NumericalValidityError
from .optimize import (
    OptimizerConfig,
    from_state,
    generator_of,
    multistart_maximize,
    params_from_hermitian,
    to_states,
    unitaries_from_params,
)
from .qstate import (
    StateVector,
    SubsystemLayout,
    apply_local,
    bipartite_entropy,
    entanglement_entropy,
    entropy_from_probs,
    max_entangled,
)
from .unitary import BipartiteGate, apply_gate, realign

E_PSI_AGREEMENT = 1e-9
ALICE = ("A_anc", "A_U")
BOB = ("B_U", "B_anc")


@dataclass
class CapacityReport:
    name: str
    value: float
    argmax_state: StateVector | None = None
    argmax_unitary: np.ndarray | None = field(default=None, repr=False)
    converged: bool = True
    restarts_used: int = 0
    ancilla_dims: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        doc = {
            "name": self.name,
            "value": self.value,
            "converged": self.converged,
            "restarts_used": self.restarts_used,
            "ancilla_dims": dict(self.ancilla_dims),
        }
        if self.argmax_state is not None:
            doc["argmax_state"] = self.argmax_state.to_records()
        return doc


def capacity_layout(gate: BipartiteGate, a_anc: int | None = None, b_anc: int | None = None) -> SubsystemLayout:
    a_anc = gate.d_a if a_anc is None else a_anc
    b_anc = gate.d_b if b_anc is None else b_anc
    return SubsystemLayout([("A_anc", a_anc), ("A_U", gate.d_a), ("B_U", gate.d_b), ("B_anc", b_anc)])


def _clip(value: float) -> float:
    # entropy differences can come out at -1e-16 for exactly-zero capacities
    return 0.0 if -1e-12 < value < 0 else float(value)


# ----------------------------------------------------------------------------
# exact Jamiolkowski capacity

def jamiolkowski_state(gate: BipartiteGate) -> StateVector:
    """U applied to |Psi>_{A_anc A_U} |Psi>_{B_U B_anc}."""
    layout = capacity_layout(gate)
    psi = np.kron(max_entangled(gate.d_a).amplitudes, max_entangled(gate.d_b).amplitudes)
    return StateVector(layout, apply_gate(gate, psi, layout))


def e_u_psi_schmidt(gate: BipartiteGate) -> float:
    """E_U^Psi from the normalized squared operator-Schmidt coefficients."""
    return float(_e_psi_batch(gate.matrix, gate.d_a, gate.d_b))


def _e_psi_batch(mats: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    s = np.linalg.svd(realign(mats, d_a, d_b), compute_uv=False)
    return entropy_from_probs(s**2 / (d_a * d_b))


def e_u_psi(gate: BipartiteGate) -> float:
    """Entanglement of the Jamiolkowski state, cross-checked against the operator-Schmidt route."""
    via_state = entanglement_entropy(jamiolkowski_state(gate), ALICE)
    via_schmidt = e_u_psi_schmidt(gate)
    if abs(via_state - via_schmidt) > E_PSI_AGREEMENT:
        raise NumericalValidityError(
            f"Jamiolkowski-state and operator-Schmidt values disagree: {via_state} vs {via_schmidt}"
        )
    return _clip(via_state)


# ----------------------------------------------------------------------------
# optimized capacities

def _product_batch(phi: np.ndarray, chi: np.ndarray) -> np.ndarray:
    return (phi[:, :, None] * chi[:, None, :]).reshape(phi.shape[0], -1)


def _report(name, result, config, layout, state=None, unitary=None, n_starts=0):
    return CapacityReport(
        name=name,
        value=_clip(result.value),
        argmax_state=state,
        argmax_unitary=unitary,
        converged=result.converged,
        restarts_used=config.restarts + n_starts,
        ancilla_dims={"A_anc": layout.dim("A_anc"), "B_anc": layout.dim("B_anc")},
    )


def e_u(gate: BipartiteGate, config: OptimizerConfig | None = None, starts=()) -> CapacityReport:
    """Best entanglement reachable from product inputs |phi>_A |chi>_B.

    ``starts`` holds extra initial points as ``(phi, chi)`` amplitude pairs.
    When the ancillas match the systems, |Psi>|Psi> is always tried.
    """
    config = config or OptimizerConfig()
    layout = capacity_layout(gate, config.ancilla("A_anc", gate.d_a), config.ancilla("B_anc", gate.d_b))
    p = layout.dim_of(ALICE)
    q = layout.dim_of(BOB)
    dims = layout.dims

    def f(x):
        psi = _product_batch(to_states(x[:, :2 * p], p), to_states(x[:, 2 * p:], q))
        return bipartite_entropy(apply_local(gate.matrix, psi, dims, [1, 2]), dims, [0, 1])

    inits = [np.concatenate([from_state(a), from_state(b)]) for a, b in starts]
    if layout.dim("A_anc") == gate.d_a and layout.dim("B_anc") == gate.d_b:
        inits.insert(0, np.concatenate([
            from_state(max_entangled(gate.d_a).amplitudes), from_state(max_entangled(gate.d_b).amplitudes)
        ]))
    res = multistart_maximize(f, 2 * (p + q), config, inits)
    phi = to_states(res.x[:2 * p], p)
    chi = to_states(res.x[2 * p:], q)
    state = StateVector(layout, np.kron(phi, chi))
    return _report("e_u", res, config, layout, state=state, n_starts=len(inits))


def delta_e_u(gate: BipartiteGate, config: OptimizerConfig | None = None, starts=()) -> CapacityReport:
    """Largest single-use increase E(U|psi>) - E(|psi>) over all inputs on the capacity layout.

    ``starts`` holds amplitude vectors on that layout (for instance the
    argmax of ``e_u``); |Psi>|Psi> is always tried when the ancillas match.
    """
    config = config or OptimizerConfig()
    layout = capacity_layout(gate, config.ancilla("A_anc", gate.d_a), config.ancilla("B_anc", gate.d_b))
    n = layout.total_dim
    dims = layout.dims

    def f(x):
        psi = to_states(x, n)
        out = apply_local(gate.matrix, psi, dims, [1, 2])
        both = bipartite_entropy(np.stack([out, psi]), dims, [0, 1])
        return both[0] - both[1]

    inits = [from_state(s.amplitudes if isinstance(s, StateVector) else s) for s in starts]
    if layout.dim("A_anc") == gate.d_a and layout.dim("B_anc") == gate.d_b:
        inits.insert(0, from_state(jamiolkowski_input(gate)))
    res = multistart_maximize(f, 2 * n, config, inits)
    state = StateVector(layout, to_states(res.x, n))
    return _report("delta_e_u", res, config, layout, state=state, n_starts=len(inits))


def jamiolkowski_input(gate: BipartiteGate) -> np.ndarray:
    return np.kron(max_entangled(gate.d_a).amplitudes, max_entangled(gate.d_b).amplitudes)


def _unitary_sampler(n: int):
    def sample(rng):
        return rng.standard_normal(n * n) * 1.5
    return sample


def delta_e_u_psi(gate: BipartiteGate, config: OptimizerConfig | None = None, starts=()) -> CapacityReport:
    """max over U_0 of E^Psi(U U_0) - E^Psi(U_0); ``starts`` are candidate U_0 matrices."""
    config = config or OptimizerConfig()
    n = gate.dim
    d_a, d_b = gate.d_a, gate.d_b

    def f(x):
        u0 = unitaries_from_params(x, n)
        both = _e_psi_batch(np.concatenate([gate.matrix @ u0, u0]), d_a, d_b)
        m = x.shape[0]
        return both[:m] - both[m:]

    inits = [np.zeros(n * n)] + [params_from_hermitian(generator_of(np.asarray(u))) for u in starts]
    res = multistart_maximize(f, n * n, config, inits, sampler=_unitary_sampler(n))
    u0 = unitaries_from_params(res.x, n)
    layout = capacity_layout(gate)
    state = StateVector(layout, apply_local(u0, jamiolkowski_input(gate), layout.dims, [1, 2]))
    return _report("delta_e_u_psi", res, config, layout, state=state, unitary=u0, n_starts=len(inits))


def _direction(direction: str) -> str:
    d = direction.strip().lower()
    if d in ("->", "→", "forward", "right", "a2b"):
        return "->"
    if d in ("<-", "←", "backward", "left", "b2a"):
        return "<-"
    raise ValueError(f"direction must be '->' or '<-', got {direction!r}")


def _onesided_setup(gate, direction, config):
    """Layout, frozen-side amplitudes and free-side size for a one-sided capacity."""
    if direction == "->":
        free_anc = config.ancilla("B_anc", gate.d_b)
        layout = capacity_layout(gate, gate.d_a, free_anc)
        frozen = max_entangled(gate.d_a).amplitudes
        free_dim = layout.dim_of(BOB)
        free_default = max_entangled(gate.d_b).amplitudes if free_anc == gate.d_b else None
    else:
        free_anc = config.ancilla("A_anc", gate.d_a)
        layout = capacity_layout(gate, free_anc, gate.d_b)
        frozen = max_entangled(gate.d_b).amplitudes
        free_dim = layout.dim_of(ALICE)
        free_default = max_entangled(gate.d_a).amplitudes if free_anc == gate.d_a else None
    return layout, frozen, free_dim, free_default


def _assemble(direction, frozen, free):
    """Full input states from the frozen side and a stack of free-side vectors."""
    fixed = np.broadcast_to(frozen, (free.shape[0], frozen.size))
    if direction == "->":
        return _product_batch(fixed, free)
    return _product_batch(free, fixed)


def e_u_psi_onesided(gate: BipartiteGate, direction: str = "->", config: OptimizerConfig | None = None,
                     starts=()) -> CapacityReport:
    """One party's input frozen at |Psi>; optimize the other party's (ancilla-assisted) input.

    ``"->"`` freezes Alice, ``"<-"`` freezes Bob.  ``starts`` are free-side
    amplitude vectors.
    """
    config = config or OptimizerConfig()
    direction = _direction(direction)
    layout, frozen, m, free_default = _onesided_setup(gate, direction, config)
    dims = layout.dims

    def f(x):
        psi = _assemble(direction, frozen, to_states(x, m))
        return bipartite_entropy(apply_local(gate.matrix, psi, dims, [1, 2]), dims, [0, 1])

    inits = [from_state(s) for s in starts]
    if free_default is not None:
        inits.insert(0, from_state(free_default))
    res = multistart_maximize(f, 2 * m, config, inits)
    state = StateVector(layout, _assemble(direction, frozen, to_states(res.x, m)[None, :])[0])
    name = "e_u_psi_fwd" if direction == "->" else "e_u_psi_bwd"
    report = _report(name, res, config, layout, state=state, n_starts=len(inits))
    report.extra["free_state"] = to_states(res.x, m)
    return report


def delta_e_u_psi_onesided(gate: BipartiteGate, direction: str = "->", config: OptimizerConfig | None = None,
                           starts=()) -> CapacityReport:
    """Joint search over the free-side input and U_0 of E(U U_0 |in>) - E(U_0 |in>).

    ``starts`` are ``(free_state, u0)`` pairs, e.g. ``(|Psi>, argmax of delta_e_u_psi)``.
    """
    config = config or OptimizerConfig()
    direction = _direction(direction)
    layout, frozen, m, free_default = _onesided_setup(gate, direction, config)
    dims = layout.dims
    n = gate.dim

    def f(x):
        psi = _assemble(direction, frozen, to_states(x[:, :2 * m], m))
        u0 = unitaries_from_params(x[:, 2 * m:], n)
        before = apply_local(u0, psi, dims, [1, 2])
        after = apply_local(gate.matrix, before, dims, [1, 2])
        k = x.shape[0]
        both = bipartite_entropy(np.concatenate([after, before]), dims, [0, 1])
        return both[:k] - both[k:]

    inits = [np.concatenate([from_state(s), params_from_hermitian(generator_of(np.asarray(u)))])
             for s, u in starts]
    if free_default is not None:
        inits.insert(0, np.concatenate([from_state(free_default), np.zeros(n * n)]))

    def sampler(rng):
        return np.concatenate([rng.standard_normal(2 * m), rng.standard_normal(n * n) * 1.5])

    res = multistart_maximize(f, 2 * m + n * n, config, inits, sampler=sampler)
    u0 = unitaries_from_params(res.x[2 * m:], n)
    free = to_states(res.x[:2 * m], m)
    state = StateVector(layout, _assemble(direction, frozen, free[None, :])[0])
    name = "delta_e_u_psi_fwd" if direction == "->" else "delta_e_u_psi_bwd"
    report = _report(name, res, config, layout, state=state, unitary=u0, n_starts=len(inits))
    report.extra["free_state"] = free
    return report


# ----------------------------------------------------------------------------
# constructions

def expanded_delta_demo(gate: BipartiteGate, psi: StateVector) -> tuple[float, float]:
    """Realize the entanglement change of ``psi`` from an input of the form |Psi>_A |chi>_B.

    ``psi`` lives on ``(A_anc, A_U, B_U, B_anc)``.  The enlarged layout is
    Alice: A_anc (dim D), A_U = A_U2 (psi's A_anc) x A_U1 (gate);
    Bob: B_U = B_U1 (gate) x B_U2 (psi's B_anc) x B_U3 (dim D),
    with D the dimension of psi's Alice side.  Alice starts maximally
    entangled with her ancilla and Bob holds all of psi in B_U; a swap U_0
    of A_U with B_U3 hands Alice's half of psi back, after which the gate on
    A_U1 x B_U1 changes the entanglement exactly as it changes psi's.

    Returns the A:B entanglement before and after the gate.
    """
    lay = psi.layout
    if lay.labels != ("A_anc", "A_U", "B_U", "B_anc") or (lay.dim("A_U"), lay.dim("B_U")) != (gate.d_a, gate.d_b):
        raise LayoutError(
            f"psi must live on (A_anc, A_U={gate.d_a}, B_U={gate.d_b}, B_anc), got {lay.factors}"
        )
    na, nb = psi.layout.dim("A_anc"), psi.layout.dim("B_anc")
    D = na * gate.d_a
    big = SubsystemLayout([
        ("A_anc", D), ("A_U2", na), ("A_U1", gate.d_a),
        ("B_U1", gate.d_b), ("B_U2", nb), ("B_U3", D),
    ])
    # |Psi>_{A_anc, A_U} |psi>_{B_U3 (Alice part), B_U1, B_U2}
    bell = max_entangled(D).amplitudes.reshape(D, na, gate.d_a)
    part = psi.amplitudes.reshape(D, gate.d_b, nb)
    initial = np.einsum("xpa,ybn->xpabny", bell, part).reshape(-1)

    # U_0 exchanges A_U (= A_U2 x A_U1) with B_U3, acting on A_U x B_U
    d_bu = gate.d_b * nb * D
    u0 = np.eye(D * d_bu).reshape(D, gate.d_b, nb, D, D, gate.d_b, nb, D)
    u0 = u0.transpose(3, 1, 2, 0, 4, 5, 6, 7).reshape(D * d_bu, D * d_bu)
    before = apply_local(u0, initial, big.dims, [1, 2, 3, 4, 5])
    after = apply_local(gate.matrix, before, big.dims, [2, 3])

    alice = [0, 1, 2]
    e_before = float(bipartite_entropy(before, big.dims, alice))
    e_after = float(bipartite_entropy(after, big.dims, alice))
    layout = psi.layout
    direct = (
        float(bipartite_entropy(apply_gate(gate, psi.amplitudes, layout), layout.dims, [0, 1]))
        - float(bipartite_entropy(psi.amplitudes, layout.dims, [0, 1]))
    )
    if abs((e_after - e_before) - direct) > 1e-9:
        raise NumericalValidityError(
            f"expanded change {e_after - e_before} differs from direct change {direct}"
        )
    return e_before, e_after


def postselection_bound_check(gate: BipartiteGate, config: OptimizerConfig | None = None,
                              e_u_value: float | None = None) -> bool:
    """E_U^Psi * (d_a d_b)^2 >= E_U, with E_U from ``e_u`` unless supplied."""
    config = config or OptimizerConfig()
    if e_u_value is None:
        e_u_value = e_u(gate, config).value
    lhs = e_u_psi(gate) * (gate.d_a * gate.d_b) ** 2
    return bool(lhs >= e_u_value - config.tolerance)


def capacity_cap(gate: BipartiteGate) -> float:
    """2 log2 min(d_a, d_b): no capacity here can exceed it."""
    return 2 * float(np.log2(min(gate.d_a, gate.d_b)))
