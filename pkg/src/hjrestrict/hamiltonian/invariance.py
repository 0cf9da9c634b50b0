"""Sampling-based checks of invariance criteria and growth bounds."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

from ..geometry.manifold import Submanifold, sobol
from ..geometry.operators import projector_derivative, projector_matrix
from .field import HamiltonianField


@dataclass(frozen=True)
class SamplePlan:
    """Base points on M paired with momenta from the ball |p| <= p_max."""

    n: int = 1024
    p_max: float = 5.0
    seed: int = 0


def ball_sample(d: int, n: int, radius: float, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points in the closed ball of given radius in R^d."""
    u = sobol(d + 1, n, seed)
    g = norm.ppf(np.clip(u[:, :d], 1e-12, 1.0 - 1e-12))
    g /= np.maximum(np.linalg.norm(g, axis=-1, keepdims=True), 1e-300)
    return radius * u[:, d:] ** (1.0 / d) * g


def plan_points(M: Submanifold, plan: SamplePlan):
    q = M.sample(plan.n, seed=plan.seed)
    p = ball_sample(M.ambient_dim, plan.n, plan.p_max, seed=plan.seed + 1)
    return q, p


@dataclass(frozen=True)
class InvarianceReport:
    max_tangency_residual: float
    max_normal_independence_residual: float
    sample_count: int
    tolerance: float
    max_tm_residual: Optional[float] = None

    @property
    def tangency_ok(self) -> bool:
        return self.max_tangency_residual <= self.tolerance

    @property
    def normal_independence_ok(self) -> bool:
        return self.max_normal_independence_residual <= self.tolerance

    @property
    def tm_ok(self) -> Optional[bool]:
        if self.max_tm_residual is None:
            return None
        return self.tangency_ok and self.max_tm_residual <= self.tolerance

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(tangency_ok=self.tangency_ok, normal_independence_ok=self.normal_independence_ok, tm_ok=self.tm_ok)
        return out


def _apply(P, v):
    return np.einsum("...ij,...j->...i", P, v)


def tangency_residual(H: HamiltonianField, M: Submanifold, q, p) -> np.ndarray:
    """|Pi_q^perp grad_p H(q, p)| pointwise."""
    g = H.grad_p(q, p)
    return np.linalg.norm(g - _apply(projector_matrix(M, q), g), axis=-1)


def normal_independence_defect(H: HamiltonianField, M: Submanifold, q, p) -> np.ndarray:
    """|H(q, p) - H(q, Pi_q p)| pointwise, for q on M."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    return np.abs(H(q, p) - H(q, _apply(projector_matrix(M, q), p)))


def check_m_invariance(H: HamiltonianField, M: Submanifold, plan: SamplePlan = SamplePlan(), tol: float = 1e-8) -> InvarianceReport:
    """Both M x R^d criteria over a sample set, reported independently.

    The tangency criterion looks at grad_p H, the normal-independence
    criterion compares H(q, p) with H(q, Pi_q p); they are equivalent in
    exact arithmetic, so reporting both makes the equivalence testable.
    """
    q, p = plan_points(M, plan)
    return InvarianceReport(
        max_tangency_residual=float(np.max(tangency_residual(H, M, q, p))),
        max_normal_independence_residual=float(np.max(normal_independence_defect(H, M, q, p))),
        sample_count=len(q),
        tolerance=tol,
    )


def tm_residual(H: HamiltonianField, M: Submanifold, q, p, method: str = "auto") -> np.ndarray:
    """|(I - Pi_q) grad_q H + h_q(grad_p H, p)| for tangent p.

    The second fundamental form is fed the tangential part of grad_p H; the
    normal part is measured separately by :func:`tangency_residual`.
    """
    P = projector_matrix(M, q)
    gq = H.grad_q(q, p)
    gp = _apply(P, H.grad_p(q, p))
    lhs = gq - _apply(P, gq)
    h = _apply(projector_derivative(M, q, gp, method=method), p)
    return np.linalg.norm(lhs + h, axis=-1)


def check_tm_invariance(H: HamiltonianField, M: Submanifold, plan: SamplePlan = SamplePlan(), tol: float = 1e-6) -> InvarianceReport:
    q, p = plan_points(M, plan)
    p = _apply(projector_matrix(M, q), p)
    return InvarianceReport(
        max_tangency_residual=float(np.max(tangency_residual(H, M, q, p))),
        max_normal_independence_residual=float(np.max(normal_independence_defect(H, M, q, p))),
        sample_count=len(q),
        tolerance=tol,
        max_tm_residual=float(np.max(tm_residual(H, M, q, p))),
    )


@dataclass(frozen=True)
class Region:
    """Compact sampling region: a box for q and a ball for p."""

    q_box: np.ndarray
    p_radius: float
    n: int = 512
    seed: int = 0


@dataclass(frozen=True)
class GrowthReport:
    C: float
    hessian_ratio: float
    grad_p_ratio: float
    value_ratio: float
    sample_count: int
    slack: float = 1e-6  # absorbs finite-difference noise in the Hessian ratio

    @property
    def satisfied(self) -> bool:
        return max(self.hessian_ratio, self.grad_p_ratio, self.value_ratio) <= 1.0 + self.slack

    def to_dict(self) -> dict:
        out = asdict(self)
        out["satisfied"] = self.satisfied
        return out


def _phase_hessian(H: HamiltonianField, q, p) -> np.ndarray:
    d = q.shape[-1]
    z = np.concatenate([q, p], axis=-1)
    h = 1e-4 * (1.0 + np.linalg.norm(z, axis=-1))[..., None]

    def grad(z):
        qq, pp = z[..., :d], z[..., d:]
        return np.concatenate([H.grad_q(qq, pp), H.grad_p(qq, pp)], axis=-1)

    cols = []
    for j in range(2 * d):
        e = np.zeros(2 * d)
        e[j] = 1.0
        cols.append((grad(z + h * e) - grad(z - h * e)) / (2.0 * h))
    hess = np.stack(cols, axis=-1)
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


def check_growth_assumptions(H: HamiltonianField, region: Region, C: float) -> GrowthReport:
    """Largest observed ratios against |d^2H| <= C, |grad_p H| <= C(1+|p|), |H| <= C(1+|p|^2).

    Advisory only: a ratio <= 1 on samples proves nothing about the bound.
    """
    box = np.asarray(region.q_box, dtype=float)
    d = len(box)
    q = box[:, 0] + sobol(d, region.n, region.seed) * (box[:, 1] - box[:, 0])
    p = ball_sample(d, region.n, region.p_radius, seed=region.seed + 1)
    pn = np.linalg.norm(p, axis=-1)
    hess = np.linalg.norm(_phase_hessian(H, q, p), ord=2, axis=(-2, -1))
    gp = np.linalg.norm(H.grad_p(q, p), axis=-1)
    val = np.abs(H(q, p))
    return GrowthReport(
        C=C,
        hessian_ratio=float(np.max(hess) / C),
        grad_p_ratio=float(np.max(gp / (C * (1.0 + pn)))),
        value_ratio=float(np.max(val / (C * (1.0 + pn**2)))),
        sample_count=region.n,
    )
