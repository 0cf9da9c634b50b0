"""Moving Hamiltonians and solutions between R^d and a submanifold M.

Restriction evaluates ambient objects on M (and, for Hamiltonians, on
tangent momenta). Extension goes the other way inside the tube U_theta:

    H(q, p) = Hbar(q~, v(q)^{-1} Pi_{q~} p),    u(t, q) = ubar(t, q~) + a |q - q~|^2

with q~ = closest_point(M, q). The projector is taken at q~ because v(q)^{-1}
acts on T_{q~}M.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import OutsideTube
from .geometry.manifold import Chart, Submanifold
from .geometry.operators import _v_inverse_at, closest_point, projector_matrix
from .hamiltonian.field import HamiltonianField
from .hjsolver.grid import GridFunction

TimeFn = Callable[[float, np.ndarray], np.ndarray]


def _apply(P, v):
    return np.einsum("...ij,...j->...i", P, v)


@dataclass(frozen=True, eq=False)
class ManifoldFunction:
    """A (possibly time-dependent) scalar function on M, called as ``f(t, q)``.

    With ``snap=True`` the argument is first replaced by closest_point(q), so
    points slightly off M (or anywhere in the tube) are accepted. Otherwise
    points are checked to lie on M.
    """

    func: TimeFn
    M: Submanifold
    name: str = "ubar"
    snap: bool = False

    def __call__(self, t, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.snap:
            q = closest_point(self.M, q)
        else:
            self.M.require_on_manifold(q)
        return np.asarray(self.func(t, q), dtype=float)

    def at(self, t: float) -> Callable[[np.ndarray], np.ndarray]:
        """The time slice q -> f(t, q)."""
        return lambda q: self(t, q)

    def at_chart(self, chart: Chart, x, t: float = 0.0) -> np.ndarray:
        """Evaluate at the points chart.manifold_point(x) for tangential chart coordinates x."""
        return self(t, chart.manifold_point(np.asarray(x, dtype=float)))

    @classmethod
    def static(cls, M: Submanifold, f: Callable[[np.ndarray], np.ndarray], name: str = "ubar0", snap: bool = False):
        return cls(lambda t, q: f(q), M, name, snap)

    @classmethod
    def from_chart_grid(cls, M: Submanifold, chart: Chart, gf: GridFunction, name: str = "ubar"):
        """Function on M backed by chart-coordinate grid values (time fixed at gf.t)."""

        def func(t, q):
            x = chart.inverse(q)[..., : chart.manifold_dim]
            return gf.interpolate(x)

        return cls(func, M, name)


@dataclass(frozen=True, eq=False)
class TangentBundleFunction:
    """A function Hbar(q, p) on TM.

    Calling it projects p onto T_qM first; :meth:`evaluate` also returns the
    defect |f(q, p) - f(q, Pi_q p)| of the underlying ambient function.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    M: Submanifold
    name: str = "Hbar"
    grad_p: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def evaluate(self, q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        self.M.require_on_manifold(q)
        pt = _apply(projector_matrix(self.M, q), p)
        val = np.asarray(self.func(q, pt), dtype=float)
        defect = np.abs(np.asarray(self.func(q, p), dtype=float) - val)
        return val, defect

    def __call__(self, q, p) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        self.M.require_on_manifold(q)
        return np.asarray(self.func(q, _apply(projector_matrix(self.M, q), np.asarray(p, dtype=float))), dtype=float)

    def defect(self, q, p) -> np.ndarray:
        return self.evaluate(q, p)[1]


def restrict_hamiltonian(H: HamiltonianField, M: Submanifold) -> TangentBundleFunction:
    """Hbar = H restricted to TM."""
    if H.dim != M.ambient_dim:
        raise ValueError("Hamiltonian and manifold live in different dimensions")

    def grad_p(q, p):
        P = projector_matrix(M, q)
        return _apply(P, H.grad_p(q, _apply(P, p)))

    return TangentBundleFunction(H.__call__, M, f"restrict[{H.name}]", grad_p)


def restrict_solution(u: Union[TimeFn, GridFunction], M: Submanifold, name: str = "ubar") -> ManifoldFunction:
    """ubar(t, q) = u(t, q) for q on M.

    A :class:`GridFunction` is sampled by multilinear interpolation, which
    adds an O(dx^2) error for smooth u; its time argument is ignored (the
    snapshot time is gf.t). Points off the grid raise OutOfGrid.
    """
    if isinstance(u, GridFunction):
        gf = u
        return ManifoldFunction(lambda t, q: gf.interpolate(q), M, name)
    return ManifoldFunction(lambda t, q: np.asarray(u(t, q), dtype=float), M, name)


def _tangent_bundle(Hbar, M: Submanifold) -> TangentBundleFunction:
    if isinstance(Hbar, TangentBundleFunction):
        return Hbar
    if isinstance(Hbar, HamiltonianField):
        return restrict_hamiltonian(Hbar, M)
    return TangentBundleFunction(Hbar, M)


def extend_hamiltonian(Hbar, M: Submanifold) -> HamiltonianField:
    """H(q, p) = Hbar(q~, v(q)^{-1} Pi_{q~} p) on U_theta x R^d.

    Args:
        Hbar: a :class:`TangentBundleFunction`, or a HamiltonianField / plain
            callable whose restriction to TM is meant.

    Raises:
        OutsideTube: when dist(q, M) >= theta.
    """
    Hb = _tangent_bundle(Hbar, M)

    def transport(q, p):
        q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
        qt = closest_point(M, q)
        P = projector_matrix(M, qt)
        return qt, P, _v_inverse_at(M, q, qt, _apply(P, p))

    def func(q, p):
        qt, _, w = transport(q, p)
        return Hb(qt, w)

    dp = None
    if Hb.grad_p is not None:

        def dp(q, p):
            q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
            qt, P, w = transport(q, p)
            # v(q)^{-1} is self-adjoint on T_{q~}M, so the chain rule keeps it untransposed
            return _v_inverse_at(M, q, qt, _apply(P, Hb.grad_p(qt, w)))

    return HamiltonianField(func=func, dim=M.ambient_dim, name=f"extend[{Hb.name}]", dp=dp)


@dataclass(frozen=True)
class ExtensionParams:
    """Quadratic normal coefficient ``a`` (any real) and an optional tighter tube radius."""

    a: float = 0.0
    theta: Optional[float] = None

    def guard(self, M: Submanifold) -> float:
        return M.theta if self.theta is None else min(M.theta, self.theta)


@dataclass(frozen=True, eq=False)
class ExtendedFunction:
    """u(t, q) = ubar(t, q~) + a |q - q~|^2 on the open tube dist < theta."""

    ubar: TimeFn
    M: Submanifold
    params: ExtensionParams

    def __call__(self, t, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        qt = closest_point(self.M, q)
        dist2 = np.sum((q - qt) ** 2, axis=-1)
        theta = self.params.guard(self.M)
        # the tube is open; a point within round-off of its boundary counts as on it
        if np.any(np.sqrt(dist2) >= theta * (1.0 - 1e-12)):
            raise OutsideTube(f"{self.M.name}: point at distance {np.sqrt(np.max(dist2)):.6g} >= {theta:g}")
        return np.asarray(self.ubar(t, qt), dtype=float) + self.params.a * dist2

    def to_grid(self, grid, t: float = 0.0) -> GridFunction:
        """Sample on a grid lying inside the tube (the grid path; the closure stays authoritative)."""
        return GridFunction(grid, self(t, grid.mesh), t, {"source": "extend_function", "a": self.params.a})


def extend_function(ubar, M: Submanifold, params: ExtensionParams = ExtensionParams()) -> ExtendedFunction:
    """Extend ubar(t, .) from M to the tube with a quadratic normal term."""
    return ExtendedFunction(ubar, M, params)


__all__ = [
    "ExtendedFunction",
    "ExtensionParams",
    "ManifoldFunction",
    "TangentBundleFunction",
    "extend_function",
    "extend_hamiltonian",
    "restrict_hamiltonian",
    "restrict_solution",
]
