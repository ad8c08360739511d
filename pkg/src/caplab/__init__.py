"""Entangling capacities, communication ensembles and induced channels of bipartite gates."""

from .capacities import (
    CapacityReport,
    capacity_cap,
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
from .channels import ce_capacity, ce_objective, chi_c_lower_bound, induce_channel
from .ensembles import (
    Ensemble,
    check_con1,
    check_con2,
    check_con3,
    check_con4,
    delta_ensemble_con34,
    ensemble_dense,
    ensemble_dense_delta,
    ensemble_phased,
    holevo,
    two_qubit_vjk,
)
from .optimize import OptimizerConfig
from .qstate import (
    DensityOperator,
    StateVector,
    SubsystemLayout,
    entanglement_entropy,
    max_entangled,
    partial_trace,
    von_neumann_entropy,
)
from .unitary import BipartiteGate, CanonicalForm, gate_zz, kak_decompose, load_gate, random_gate, save_gate

__version__ = "0.1.0"
