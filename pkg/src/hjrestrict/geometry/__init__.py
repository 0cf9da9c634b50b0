"""Embedded submanifolds and their extrinsic geometry."""

from .catalog import (
    CHARTS,
    MANIFOLDS,
    circle,
    flat,
    identity_chart,
    polar_chart,
    rotation_chart,
    sphere,
    spherical_chart,
    torus,
    torus_chart,
)
from .manifold import Chart, ImplicitRep, ParametricRep, Submanifold, TangentFrame
from .operators import (
    closest_point,
    distance,
    normal_projector,
    project_onto,
    projector_derivative,
    projector_matrix,
    second_fundamental_form,
    tangent_frame,
    v_apply,
    v_inverse_apply,
    v_inverse_matrix,
    weingarten_adjoint,
)

__all__ = [
    "CHARTS",
    "MANIFOLDS",
    "Chart",
    "ImplicitRep",
    "ParametricRep",
    "Submanifold",
    "TangentFrame",
    "circle",
    "closest_point",
    "distance",
    "flat",
    "identity_chart",
    "normal_projector",
    "polar_chart",
    "project_onto",
    "projector_derivative",
    "projector_matrix",
    "rotation_chart",
    "second_fundamental_form",
    "sphere",
    "spherical_chart",
    "tangent_frame",
    "torus",
    "torus_chart",
    "v_apply",
    "v_inverse_apply",
    "v_inverse_matrix",
    "weingarten_adjoint",
]
