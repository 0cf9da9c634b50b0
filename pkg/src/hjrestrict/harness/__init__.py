"""Scenario files, experiment drivers, reports and the command line."""

from .experiments import (
    RUNNERS,
    run_chart_equivalence,
    run_convergence,
    run_extend_check,
    run_invariance_report,
    run_restrict_check,
    run_scenario,
    tube_samples,
)
from .report import Check, Report
from .scenario import EXPERIMENTS, SCHEMA, Scenario, load_scenario, validate_document

__all__ = [
    "EXPERIMENTS",
    "RUNNERS",
    "SCHEMA",
    "Check",
    "Report",
    "Scenario",
    "load_scenario",
    "run_chart_equivalence",
    "run_convergence",
    "run_extend_check",
    "run_invariance_report",
    "run_restrict_check",
    "run_scenario",
    "tube_samples",
    "validate_document",
]
