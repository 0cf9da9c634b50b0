"""Grid solvers for the Cauchy problem u_t + H(q, grad u) = 0."""

from .convergence import ConvergenceProblem, ConvergenceRow, convergence_study, hopf_lax_abs, linf_error
from .grid import Axis, Grid, GridFunction, grid_from_spec, multilinear_interpolate
from .io import from_bytes, read_binary, to_bytes, write_binary, write_csv
from .scheme import (
    SchemeParams,
    central_gradient,
    chart_hamiltonian,
    estimate_dissipation,
    lax_friedrichs_step,
    max_stable_dt,
    pde_residual,
    pde_residuals,
    solve_cp,
    solve_cp_on_manifold,
)

__all__ = [
    "Axis",
    "ConvergenceProblem",
    "ConvergenceRow",
    "Grid",
    "GridFunction",
    "SchemeParams",
    "central_gradient",
    "chart_hamiltonian",
    "convergence_study",
    "estimate_dissipation",
    "from_bytes",
    "grid_from_spec",
    "hopf_lax_abs",
    "lax_friedrichs_step",
    "linf_error",
    "max_stable_dt",
    "multilinear_interpolate",
    "pde_residual",
    "pde_residuals",
    "read_binary",
    "solve_cp",
    "solve_cp_on_manifold",
    "to_bytes",
    "write_binary",
    "write_csv",
]
