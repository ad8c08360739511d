import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caplab.capacities import (
    capacity_cap,
    capacity_layout,
    delta_e_u,
    delta_e_u_psi,
    delta_e_u_psi_onesided,
    e_u,
    e_u_psi,
    e_u_psi_onesided,
    e_u_psi_schmidt,
    expanded_delta_demo,
    jamiolkowski_state,
    postselection_bound_check,
)
from caplab.optimize import OptimizerConfig, central_gradient, generator_of, multistart_maximize
from caplab.qstate import StateVector, apply_local, entanglement_entropy, random_state
from caplab.unitary import BipartiteGate, apply_gate, cnot, gate_zz, identity, random_gate, random_unitary, swap

from conftest import h2

CFG = OptimizerConfig(restarts=4, seed=3)


# ----------------------------------------------------------------------------
# optimizer plumbing

def test_central_gradient_matches_analytic():
    def f(x):
        return np.sin(x).sum(axis=1)

    x = np.array([0.1, 0.7, -1.2])
    v, g = central_gradient(f, x)
    assert abs(v - np.sin(x).sum()) < 1e-15
    assert np.abs(g - np.cos(x)).max() < 1e-9


def test_multistart_is_deterministic_and_reports_best_start():
    def f(x):
        return -((x - 1.5) ** 2).sum(axis=1)

    cfg = OptimizerConfig(restarts=3, seed=9)
    a = multistart_maximize(f, 2, cfg)
    b = multistart_maximize(f, 2, cfg)
    assert a.value == b.value and np.array_equal(a.x, b.x)
    assert abs(a.value) < 1e-9 and a.converged


def test_thread_count_does_not_change_results(monkeypatch):
    g = random_gate(2, 2, 17)
    monkeypatch.setenv("CAPLAB_THREADS", "1")
    one = e_u_psi_onesided(g, "->", CFG).value
    monkeypatch.setenv("CAPLAB_THREADS", "4")
    four = e_u_psi_onesided(g, "->", CFG).value
    assert one == four


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(tolerance=0)


def test_generator_round_trip():
    for seed in range(10):
        u = random_unitary(4, seed)
        h = generator_of(u)
        w, v = np.linalg.eigh(h)
        assert np.abs((v * np.exp(1j * w)) @ v.conj().T - u).max() < 1e-10


# ----------------------------------------------------------------------------
# exact Jamiolkowski capacity

def test_e_u_psi_examples():
    assert e_u_psi(identity()) < 1e-12
    assert abs(e_u_psi(swap()) - 2.0) < 1e-9
    assert abs(e_u_psi(cnot()) - 1.0) < 1e-9
    assert abs(e_u_psi(gate_zz(np.pi / 8)) - h2(np.cos(np.pi / 8) ** 2)) < 1e-9
    assert abs(e_u_psi(gate_zz(np.pi / 8)) - 0.60088) < 1e-5


def test_e_u_psi_zz_oracle():
    for a in np.linspace(0.01, np.pi / 4, 50):
        assert abs(e_u_psi(gate_zz(a)) - h2(np.cos(a) ** 2)) < 1e-9


def test_jamiolkowski_state_layout():
    g = random_gate(2, 3, 0)
    psi = jamiolkowski_state(g)
    assert psi.layout.labels == ("A_anc", "A_U", "B_U", "B_anc")
    assert psi.layout.dims == (2, 2, 3, 3)


def test_two_routes_agree_on_random_gates():
    for seed in range(100):
        da, db = [(2, 2), (2, 3), (3, 2), (3, 3)][seed % 4]
        g = random_gate(da, db, seed)
        via_state = entanglement_entropy(jamiolkowski_state(g), {"A_anc", "A_U"})
        assert abs(via_state - e_u_psi_schmidt(g)) < 1e-9


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3)])
def test_time_symmetry_exact(dims):
    for seed in range(50):
        g = random_gate(*dims, seed)
        assert abs(e_u_psi(g) - e_u_psi(g.adjoint())) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3), (3, 2)]), st.integers(0, 2**31 - 1))
def test_local_invariance(dims, seed):
    da, db = dims
    g = random_gate(da, db, seed)
    a, c = random_unitary(da, seed + 1), random_unitary(da, seed + 2)
    b, d = random_unitary(db, seed + 3), random_unitary(db, seed + 4)
    dressed = np.kron(a, b) @ g.matrix @ np.kron(c, d)
    assert abs(e_u_psi(BipartiteGate(da, db, dressed)) - e_u_psi(g)) < 1e-9


# ----------------------------------------------------------------------------
# optimized capacities

def test_e_u_examples():
    assert e_u(identity(), CFG).value < 1e-9
    assert abs(e_u(cnot(), CFG).value - 1.0) < 1e-6
    assert abs(e_u(swap(), CFG).value - 2.0) < 1e-6


def test_e_u_brute_force_cross_check():
    # no ancillas: a grid over real product inputs never beats the optimizer
    g = cnot()
    best = 0.0
    layout = capacity_layout(g, 1, 1)
    for t in np.linspace(0, np.pi, 25):
        for s in np.linspace(0, np.pi, 25):
            phi = np.array([np.cos(t), np.sin(t)])
            chi = np.array([np.cos(s), np.sin(s)])
            out = StateVector(layout, apply_gate(g, np.kron(phi, chi), layout))
            best = max(best, entanglement_entropy(out, {"A_anc", "A_U"}))
    rep = e_u(g, OptimizerConfig(restarts=4, seed=1, ancilla_dims={"A_anc": 1, "B_anc": 1}))
    assert abs(best - 1.0) < 1e-12
    assert abs(rep.value - 1.0) < 1e-6


def test_delta_e_u_examples():
    assert delta_e_u(identity(), CFG).value < 1e-9
    assert abs(delta_e_u(gate_zz(np.pi / 4), CFG).value - 1.0) < 1e-4


def test_delta_e_u_ratio_grows_as_alpha_shrinks():
    ratios = [delta_e_u(gate_zz(a), CFG).value / e_u_psi(gate_zz(a)) for a in (0.05, 0.2, np.pi / 4)]
    assert ratios[0] > ratios[1] > ratios[2] - 1e-3
    assert ratios[0] > 3


def test_delta_e_u_psi_examples():
    assert delta_e_u_psi(identity(), CFG).value < 1e-9
    assert abs(delta_e_u_psi(swap(), CFG).value - 2.0) < 1e-4
    for seed in range(5):
        g = random_gate(2, 2, seed)
        rep = delta_e_u_psi(g, CFG)
        assert rep.value >= e_u_psi(g) - 1e-6
        u0 = rep.argmax_unitary
        direct = e_u_psi(BipartiteGate(2, 2, g.matrix @ u0)) - e_u_psi(BipartiteGate(2, 2, u0))
        assert abs(direct - rep.value) < 1e-9


def test_onesided_examples():
    assert e_u_psi_onesided(identity(), "->", CFG).value < 1e-9
    assert abs(e_u_psi_onesided(swap(), "->", CFG).value - 2.0) < 1e-6
    assert delta_e_u_psi_onesided(identity(), "->", CFG).value < 1e-9
    assert abs(delta_e_u_psi_onesided(swap(), "<-", CFG).value - 2.0) < 1e-4


def test_monotone_chains_on_random_gates():
    tol = 1e-6
    for seed in range(20):
        g = random_gate(2, 2, 100 + seed)
        e_psi = e_u_psi(g)
        fwd = e_u_psi_onesided(g, "->", CFG)
        bwd = e_u_psi_onesided(g, "<-", CFG)
        full = e_u(g, CFG, starts=[(np.eye(2).reshape(-1) / np.sqrt(2), fwd.extra["free_state"]),
                                   (bwd.extra["free_state"], np.eye(2).reshape(-1) / np.sqrt(2))])
        assert e_psi <= fwd.value + tol and e_psi <= bwd.value + tol
        assert fwd.value <= full.value + tol and bwd.value <= full.value + tol
        assert full.value <= capacity_cap(g) + tol


def test_delta_chain_on_random_gates():
    tol = 1e-6
    for seed in range(6):
        g = random_gate(2, 2, 200 + seed)
        d_psi = delta_e_u_psi(g, CFG)
        d_fwd = delta_e_u_psi_onesided(g, "->", CFG, starts=[(np.eye(2).reshape(-1) / np.sqrt(2),
                                                              d_psi.argmax_unitary)])
        assert d_psi.value <= d_fwd.value + tol
        start = apply_local(d_fwd.argmax_unitary, d_fwd.argmax_state.amplitudes, d_fwd.argmax_state.layout.dims, [1, 2])
        d_full = delta_e_u(g, CFG, starts=[d_psi.argmax_state, start])
        assert d_fwd.value <= d_full.value + tol
        assert d_full.value <= capacity_cap(g) + tol


def test_delta_time_symmetry():
    for seed in range(10):
        g = random_gate(2, 2, 300 + seed)
        fwd = delta_e_u_psi(g, CFG)
        bwd = delta_e_u_psi(g.adjoint(), CFG)
        assert abs(fwd.value - bwd.value) < 1e-3


def test_reversed_roles_match_swapped_gate():
    for seed in range(5):
        g = random_gate(2, 3, 400 + seed)
        back = e_u_psi_onesided(g, "<-", CFG).value
        forward_on_swapped = e_u_psi_onesided(g.swapped(), "->", CFG).value
        assert abs(back - forward_on_swapped) < 1e-6


def test_capacities_in_range():
    for seed in range(3):
        g = random_gate(2, 3, 500 + seed)
        cap = capacity_cap(g)
        for rep in (e_u(g, CFG), delta_e_u_psi(g, CFG), e_u_psi_onesided(g, "->", CFG)):
            assert 0 <= rep.value <= cap + 1e-9


def test_report_records_ancillas():
    rep = e_u(cnot(), OptimizerConfig(restarts=2, ancilla_dims={"A_anc": 3}))
    assert rep.ancilla_dims == {"A_anc": 3, "B_anc": 2}
    assert rep.argmax_state.layout.dims == (3, 2, 2, 2)
    assert rep.to_json()["restarts_used"] == rep.restarts_used


# ----------------------------------------------------------------------------
# constructions

def test_expanded_delta_demo():
    g = identity()
    psi = random_state(capacity_layout(g), 0)
    before, after = expanded_delta_demo(g, psi)
    assert abs(after - before) < 1e-12
    for seed in range(5):
        g = random_gate(2, 2, seed)
        psi = random_state(capacity_layout(g), seed)
        before, after = expanded_delta_demo(g, psi)
        out = StateVector(psi.layout, apply_gate(g, psi.amplitudes, psi.layout))
        direct = entanglement_entropy(out, {"A_anc", "A_U"}) - entanglement_entropy(psi, {"A_anc", "A_U"})
        assert abs((after - before) - direct) < 1e-9


def test_expanded_delta_demo_at_optimum():
    g = gate_zz(np.pi / 4)
    rep = delta_e_u(g, CFG)
    before, after = expanded_delta_demo(g, rep.argmax_state)
    assert abs((after - before) - rep.value) < 1e-6


def test_postselection_bound():
    assert postselection_bound_check(cnot(), CFG)
    assert postselection_bound_check(swap(), CFG)
    assert postselection_bound_check(identity(), CFG)
    for seed in range(5):
        assert postselection_bound_check(random_gate(2, 2, seed), CFG)
