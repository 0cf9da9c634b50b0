"""Numerical tolerances shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    on_manifold: float = 1e-9
    tangency: float = 1e-8  # relative to the vector norm
    rank: float = 1e-10
    newton_residual: float = 1e-12
    newton_max_iter: int = 50
    orthogonality: float = 1e-10  # scaled by (1 + |q|)
    non_unique: float = 1e-8
    distinct_points: float = 1e-6
    chart_det: float = 1e-12
    singular_cond: float = 1e12
    projector_fd_step: float = 1e-4  # scaled by (1 + |q|)
    gradient_fd_step: float = 1e-6  # scaled by (1 + |x|)


DEFAULT_TOLERANCES = Tolerances()
