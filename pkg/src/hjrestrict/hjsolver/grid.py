"""Uniform rectangular grids and grid functions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np

from ..errors import NonFinite, OutOfGrid

BOUNDARIES = ("extrapolate", "periodic", "linear")


@dataclass(frozen=True)
class Axis:
    """One grid axis.

    Extrapolate axes have nodes ``lo, ..., hi`` with spacing (hi - lo)/(n - 1)
    and copy the edge value into the ghost layer; ``linear`` axes use the same
    nodes but extrapolate linearly (exact for affine data, not monotone at the
    edge). Periodic axes treat [lo, hi) as one period: n nodes with spacing
    (hi - lo)/n, ``hi`` itself being identified with ``lo``.
    """

    lo: float
    hi: float
    n: int
    boundary: str = "extrapolate"

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"axis needs at least 3 points, got {self.n}")
        if not self.hi > self.lo:
            raise ValueError("axis needs hi > lo")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary policy {self.boundary!r}")

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n if self.periodic else self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        if self.periodic:
            return self.lo + self.spacing * np.arange(self.n)
        return np.linspace(self.lo, self.hi, self.n)

    def refined(self, k: int) -> "Axis":
        n = self.n * k if self.periodic else (self.n - 1) * k + 1
        return replace(self, n=n)


@dataclass(frozen=True, eq=False)
class Grid:
    axes: tuple[Axis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int, d: int, boundary: str = "extrapolate") -> "Grid":
        return cls(tuple(Axis(lo, hi, n, boundary) for _ in range(d)))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n for a in self.axes)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([a.spacing for a in self.axes])

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def mesh(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (ndim,)``."""
        return np.stack(np.meshgrid(*[a.nodes for a in self.axes], indexing="ij"), axis=-1)

    def refined(self, k: int) -> "Grid":
        return Grid(tuple(a.refined(k) for a in self.axes))

    def interior_mask(self, margin) -> np.ndarray:
        """Nodes at least ``margin`` (scalar or per axis) away from every non-periodic boundary."""
        margin = np.broadcast_to(np.asarray(margin, dtype=float), (self.ndim,))
        mask = np.ones(self.shape, dtype=bool)
        for i, a in enumerate(self.axes):
            if a.periodic:
                continue
            x = self.mesh[..., i]
            mask &= (x >= a.lo + margin[i] - 1e-12) & (x <= a.hi - margin[i] + 1e-12)
        return mask

    def describe(self) -> list[dict]:
        return [dict(lo=a.lo, hi=a.hi, n=a.n, boundary=a.boundary) for a in self.axes]


@dataclass(eq=False)
class GridFunction:
    """Values of u(t, .) on a grid; ``values`` has the grid's shape (row-major)."""

    grid: Grid
    values: np.ndarray
    t: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(self.values)):
            raise NonFinite("grid function has non-finite values")

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @classmethod
    def sample(cls, grid: Grid, func, t: float = 0.0) -> "GridFunction":
        """Evaluate ``func(points)`` at all grid nodes."""
        return cls(grid, np.broadcast_to(func(grid.mesh), grid.shape), t)

    def interpolate(self, points) -> np.ndarray:
        return multilinear_interpolate(self.grid, self.values, points)


def multilinear_interpolate(grid: Grid, values: np.ndarray, points) -> np.ndarray:
    """Multilinear interpolation; second-order accurate (error O(dx^2)) for smooth data.

    Periodic axes wrap. Points outside a non-periodic axis raise
    :class:`OutOfGrid`. Fractional indices within 1e-9 of an integer are
    snapped so that node values are returned exactly.
    """
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != grid.ndim:
        raise ValueError("point dimension does not match grid")
    lead = points.shape[:-1]
    pts = points.reshape(-1, grid.ndim)
    idx0, weights = [], []
    for i, a in enumerate(grid.axes):
        s = (pts[:, i] - a.lo) / a.spacing
        r = np.round(s)
        s = np.where(np.abs(s - r) <= 1e-9, r, s)
        if a.periodic:
            i0 = np.floor(s)
            w = s - i0
            i0 = np.mod(i0.astype(np.int64), a.n)
        else:
            if np.any((s < 0) | (s > a.n - 1)):
                raise OutOfGrid(f"points outside axis {i} range [{a.lo}, {a.hi}]")
            i0 = np.minimum(np.floor(s), a.n - 2)
            w = s - i0
            i0 = i0.astype(np.int64)
        idx0.append(i0)
        weights.append(w)
    out = np.zeros(len(pts))
    for corner in product((0, 1), repeat=grid.ndim):
        wt = np.ones(len(pts))
        index = []
        for i, c in enumerate(corner):
            a = grid.axes[i]
            wt = wt * (weights[i] if c else 1.0 - weights[i])
            j = idx0[i] + c
            index.append(np.mod(j, a.n) if a.periodic else j)
        nz = wt != 0.0
        out[nz] += wt[nz] * values[tuple(ix[nz] for ix in index)]
    return out.reshape(lead)


def grid_from_spec(axes: Sequence[dict]) -> Grid:
    return Grid(tuple(Axis(float(a["min"]), float(a["max"]), int(a["n"]), a.get("boundary", "extrapolate")) for a in axes))
