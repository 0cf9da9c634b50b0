"""Embedded submanifolds of R^d, adapted charts and tangent frames.

All callables follow numpy broadcasting conventions: points are arrays whose
trailing axis has length ``d`` and any leading axes are treated as a batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import ChartDomain, NotOnManifold

ArrayFn = Callable[[np.ndarray], np.ndarray]


def sobol(dim: int, n: int, seed: int = 0) -> np.ndarray:
    """First n points of a scrambled Sobol sequence in [0, 1]^dim."""
    m = max(0, int(np.ceil(np.log2(max(n, 1)))))
    return qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(m)[:n]


@dataclass(frozen=True, eq=False)
class Chart:
    """Diffeomorphism from chart coordinates to ambient space.

    ``phi`` straightens the manifold: chart points ``(x, 0)`` with
    ``x`` in R^m are mapped onto M. The first ``manifold_dim`` coordinates are
    tangential, the remaining ones are transverse.

    Attributes:
        phi: chart coordinates -> ambient points.
        jacobian: chart coordinates -> (d, d) Jacobian of ``phi``.
        inverse: ambient points -> chart coordinates.
        dim: ambient dimension d.
        manifold_dim: number of tangential chart coordinates m.
        domain: optional predicate on chart coordinates; points failing it
            raise :class:`ChartDomain`.
        periods: per tangential coordinate, the period of the chart (or None).
    """

    phi: ArrayFn
    jacobian: ArrayFn
    inverse: ArrayFn
    dim: int
    manifold_dim: int
    name: str = "chart"
    domain: Optional[Callable[[np.ndarray], np.ndarray]] = None
    periods: Optional[Sequence[Optional[float]]] = None
    tol: Tolerances = DEFAULT_TOLERANCES

    def check_domain(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if self.domain is not None:
            inside = np.asarray(self.domain(x), dtype=bool)
            if not np.all(inside):
                bad = np.argwhere(~np.atleast_1d(inside))[0]
                raise ChartDomain(f"{self.name}: chart coordinates outside domain at index {tuple(bad)}")
        det = np.linalg.det(self.jacobian(x))
        if np.any(~np.isfinite(det)) or np.any(np.abs(det) <= self.tol.chart_det):
            raise ChartDomain(f"{self.name}: Jacobian is singular at some chart point")

    def inverse_jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.inv(self.jacobian(x))

    def embed_tangential(self, xt: np.ndarray) -> np.ndarray:
        """Pad tangential coordinates with zeros: ``x -> (x, 0)``."""
        xt = np.asarray(xt, dtype=float)
        pad = np.zeros(xt.shape[:-1] + (self.dim - self.manifold_dim,))
        return np.concatenate([xt, pad], axis=-1)

    def manifold_point(self, xt: np.ndarray) -> np.ndarray:
        return self.phi(self.embed_tangential(xt))


@dataclass(frozen=True, eq=False)
class ImplicitRep:
    """M = F^{-1}(0) for a submersion F: R^d -> R^k.

    ``constraint`` maps (..., d) -> (..., k), ``jacobian`` maps to (..., k, d)
    and the optional ``hessian`` maps to (..., k, d, d).
    """

    constraint: ArrayFn
    jacobian: ArrayFn
    hessian: Optional[ArrayFn] = None


@dataclass(frozen=True, eq=False)
class ParametricRep:
    charts: tuple[Chart, ...]


Representation = Union[ImplicitRep, ParametricRep]


@dataclass(frozen=True, eq=False)
class Submanifold:
    """An m-dimensional embedded submanifold of R^d.

    Attributes:
        dim: manifold dimension m.
        ambient_dim: ambient dimension d.
        rep: implicit or parametric representation.
        theta: constant lower bound for the tubular radius.
        sampler: optional map from the unit cube [0, 1]^m onto M; used for
            sampling plans and for the closest-point start cloud.
        bbox: optional (d, 2) bounding box used to build a start cloud when no
            sampler is available.
        charts: adapted charts available for this manifold (may be empty).
    """

    dim: int
    ambient_dim: int
    rep: Representation
    theta: float
    name: str = "M"
    sampler: Optional[ArrayFn] = None
    bbox: Optional[np.ndarray] = None
    charts: tuple[Chart, ...] = field(default_factory=tuple)
    cloud_size: int = 512
    tol: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        if not 0 <= self.dim < self.ambient_dim:
            raise ValueError(f"need 0 <= m < d, got m={self.dim}, d={self.ambient_dim}")
        if not self.theta > 0:
            raise ValueError("theta must be positive")

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.dim

    @property
    def is_implicit(self) -> bool:
        return isinstance(self.rep, ImplicitRep)

    def chart(self, index: int = 0) -> Chart:
        charts = self.rep.charts if isinstance(self.rep, ParametricRep) else self.charts
        if not charts:
            raise ChartDomain(f"{self.name} has no chart")
        return charts[index]

    def constraint(self, q: np.ndarray) -> np.ndarray:
        if not self.is_implicit:
            raise TypeError("constraint() needs an implicit representation")
        return np.asarray(self.rep.constraint(q), dtype=float)

    def on_manifold_residual(self, q: np.ndarray) -> np.ndarray:
        """A residual that vanishes exactly on M: |F(q)| or the chart round-trip gap."""
        q = np.asarray(q, dtype=float)
        if self.is_implicit:
            return np.linalg.norm(self.constraint(q), axis=-1)
        chart = self.locate_chart(q)
        x = chart.inverse(q)
        xt = x[..., : self.dim]
        return np.linalg.norm(chart.manifold_point(xt) - q, axis=-1)

    def require_on_manifold(self, q: np.ndarray) -> None:
        res = self.on_manifold_residual(q)
        if np.any(~np.isfinite(res)) or np.any(res > self.tol.on_manifold):
            raise NotOnManifold(f"{self.name}: residual {np.max(res):.3e} exceeds {self.tol.on_manifold:.1e}")

    def locate_chart(self, q: np.ndarray) -> Chart:
        """First chart whose domain contains the (pre-image of the) points."""
        charts = self.rep.charts if isinstance(self.rep, ParametricRep) else self.charts
        for chart in charts:
            x = chart.inverse(np.asarray(q, dtype=float))
            try:
                chart.check_domain(x)
            except ChartDomain:
                continue
            return chart
        raise ChartDomain(f"{self.name}: no chart contains the given point(s)")

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        """Deterministic low-discrepancy sample of n points on M."""
        if self.dim == 0:
            return np.repeat(self.cloud[:1], n, axis=0)
        if self.sampler is not None:
            return np.asarray(self.sampler(sobol(self.dim, n, seed)), dtype=float)
        cloud = self.cloud
        idx = np.random.default_rng(seed).choice(len(cloud), size=n, replace=n > len(cloud))
        return cloud[idx]

    @cached_property
    def cloud(self) -> np.ndarray:
        """Coarse point cloud on M used to seed the closest-point Newton solves."""
        if self.sampler is not None and self.dim > 0:
            n = self.cloud_size * (2 if self.dim > 1 else 1)
            u = sobol(self.dim, n, 12345)
            return np.asarray(self.sampler(u), dtype=float)
        if self.bbox is None:
            raise ValueError(f"{self.name}: a sampler or a bbox is required to build a start cloud")
        from .operators import project_onto

        box = np.asarray(self.bbox, dtype=float)
        u = sobol(self.ambient_dim, 4 * self.cloud_size, 12345)
        raw = box[:, 0] + u * (box[:, 1] - box[:, 0])
        pts, ok = project_onto(self, raw)
        pts = pts[ok]
        if len(pts) == 0:
            raise ValueError(f"{self.name}: could not find points on M inside bbox")
        return pts

    @cached_property
    def cloud_tree(self) -> cKDTree:
        return cKDTree(self.cloud)


@dataclass(frozen=True)
class TangentFrame:
    """Orthonormal bases of T_qM (rows of ``tangent``) and its complement (rows of ``normal``)."""

    base: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray

    @property
    def basis(self) -> np.ndarray:
        return np.vstack([self.tangent, self.normal])

    def projector(self) -> np.ndarray:
        return self.tangent.T @ self.tangent

    def coordinates(self, v: np.ndarray) -> np.ndarray:
        return self.tangent @ v

    def from_coordinates(self, c: np.ndarray) -> np.ndarray:
        return c @ self.tangent
