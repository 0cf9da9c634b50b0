"""Hamiltonians on T R^d, flows, invariance criteria and chart pullbacks."""

from .catalog import HAMILTONIANS, abs_, constant, free, quartic, rotation, tangent_kinetic, transport
from .field import (
    FlowState,
    HamiltonianField,
    hamiltonian_vector_field,
    integrate_flow,
    pullback_hamiltonian,
)
from .invariance import (
    GrowthReport,
    InvarianceReport,
    Region,
    SamplePlan,
    ball_sample,
    check_growth_assumptions,
    check_m_invariance,
    check_tm_invariance,
    normal_independence_defect,
    tangency_residual,
    tm_residual,
)

__all__ = [
    "HAMILTONIANS",
    "FlowState",
    "GrowthReport",
    "HamiltonianField",
    "InvarianceReport",
    "Region",
    "SamplePlan",
    "abs_",
    "ball_sample",
    "check_growth_assumptions",
    "check_m_invariance",
    "check_tm_invariance",
    "constant",
    "free",
    "hamiltonian_vector_field",
    "integrate_flow",
    "normal_independence_defect",
    "pullback_hamiltonian",
    "quartic",
    "rotation",
    "tangency_residual",
    "tangent_kinetic",
    "tm_residual",
    "transport",
]
