"""Built-in Hamiltonians addressable by name."""

from __future__ import annotations

import numpy as np

from ..geometry.manifold import Submanifold
from .field import HamiltonianField

ROTATION_GENERATOR = np.array([[0.0, -1.0], [1.0, 0.0]])


def _zeros_like_pair(q, p):
    return np.zeros(np.broadcast_shapes(np.shape(q), np.shape(p)))


def free(d: int = 2) -> HamiltonianField:
    """|p|^2 / 2."""
    return HamiltonianField(
        func=lambda q, p: 0.5 * np.sum(p * p, axis=-1) + 0.0 * q[..., 0],
        dim=d,
        name="free",
        dq=_zeros_like_pair,
        dp=lambda q, p: p + 0.0 * q,
    )


def rotation(d: int = 2) -> HamiltonianField:
    """<p, J q> with J the quarter-turn generator acting on the first two coordinates."""
    if d < 2:
        raise ValueError("rotation needs d >= 2")
    J = np.zeros((d, d))
    J[:2, :2] = ROTATION_GENERATOR
    return HamiltonianField(
        func=lambda q, p: np.sum(p * (q @ J.T), axis=-1),
        dim=d,
        name="rotation",
        dq=lambda q, p: p @ J,
        dp=lambda q, p: q @ J.T,
    )


def transport(*c: float) -> HamiltonianField:
    """<c, p>, constant-velocity transport."""
    c = np.asarray(c, dtype=float).ravel()
    return HamiltonianField(
        func=lambda q, p: p @ c + 0.0 * q[..., 0],
        dim=len(c),
        name=f"transport({','.join(f'{x:g}' for x in c)})",
        dq=_zeros_like_pair,
        dp=lambda q, p: np.broadcast_to(c, np.broadcast_shapes(np.shape(q), np.shape(p))).copy(),
    )


def abs_(d: int = 2) -> HamiltonianField:
    """|p|; the gradient at p = 0 is taken to be 0."""

    def dp(q, p):
        n = np.linalg.norm(p, axis=-1, keepdims=True)
        return np.where(n > 0, p / np.where(n > 0, n, 1.0), 0.0) + 0.0 * q

    return HamiltonianField(
        func=lambda q, p: np.linalg.norm(p, axis=-1) + 0.0 * q[..., 0],
        dim=d,
        name="abs",
        dq=_zeros_like_pair,
        dp=dp,
    )


def quartic(d: int = 2) -> HamiltonianField:
    """|p|^4, violates the quadratic growth bounds."""
    return HamiltonianField(
        func=lambda q, p: np.sum(p * p, axis=-1) ** 2 + 0.0 * q[..., 0],
        dim=d,
        name="quartic",
        dq=_zeros_like_pair,
        dp=lambda q, p: 4.0 * np.sum(p * p, axis=-1, keepdims=True) * p + 0.0 * q,
    )


def constant(value: float = 0.0, d: int = 2) -> HamiltonianField:
    return HamiltonianField(
        func=lambda q, p: np.full(np.broadcast_shapes(np.shape(q), np.shape(p))[:-1], float(value)),
        dim=d,
        name=f"constant({value:g})",
        dq=_zeros_like_pair,
        dp=_zeros_like_pair,
    )


def tangent_kinetic(M: Submanifold) -> HamiltonianField:
    """|Pi_q p|^2 / 2 using the projector field of M.

    For implicit manifolds the projector I - J^+ J is also defined off M, so
    the Hamiltonian is defined on a neighbourhood of M.
    """
    from ..geometry.operators import _implicit_projector, projector_matrix

    def proj(q):
        if M.is_implicit:
            return _implicit_projector(M, q, check_rank=False)
        return projector_matrix(M, q)

    def func(q, p):
        q, p = np.broadcast_arrays(q, p)
        tp = np.einsum("...ij,...j->...i", proj(q), p)
        return 0.5 * np.sum(tp * tp, axis=-1)

    def dp(q, p):
        q, p = np.broadcast_arrays(q, p)
        return np.einsum("...ij,...j->...i", proj(q), p)

    return HamiltonianField(func=func, dim=M.ambient_dim, name=f"tangent_kinetic[{M.name}]", dp=dp)


HAMILTONIANS = {
    "free": free,
    "rotation": rotation,
    "transport": transport,
    "abs": abs_,
    "quartic": quartic,
    "constant": constant,
    "tangent_kinetic": tangent_kinetic,
}
