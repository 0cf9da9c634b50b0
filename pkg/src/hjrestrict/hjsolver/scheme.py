"""Monotone Lax-Friedrichs scheme for u_t + H(q, grad u) = 0 on uniform grids."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..errors import CFLViolation, NonFinite
from ..geometry.manifold import Chart, Submanifold, sobol
from ..geometry.operators import projector_matrix
from ..hamiltonian.field import HamiltonianField
from .grid import Grid, GridFunction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemeParams:
    """Lax-Friedrichs settings.

    Attributes:
        alpha: per-axis dissipation coefficients; estimated when None.
        cfl: CFL factor lambda in (0, 1]; dt = lambda / sum(alpha_i / dx_i).
        dt: fixed time step (must satisfy the CFL bound); None picks the largest allowed.
        hull_inflation: relative inflation of the sampled momentum hull.
        hull_samples: extra Sobol momenta drawn inside the hull box.
    """

    alpha: Optional[Sequence[float]] = None
    cfl: float = 0.4
    dt: Optional[float] = None
    hull_inflation: float = 0.5
    hull_samples: int = 16

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.alpha is not None and any(a < 0 for a in self.alpha):
            raise ValueError("alpha must be non-negative")


def _neighbours(values: np.ndarray, axis: int, boundary: str):
    """Values at j+e_i and j-e_i with one ghost layer filled per the boundary policy."""
    if boundary == "periodic":
        return np.roll(values, -1, axis), np.roll(values, 1, axis)
    n = values.shape[axis]
    idx = np.arange(n)
    plus = np.take(values, np.minimum(idx + 1, n - 1), axis=axis)
    minus = np.take(values, np.maximum(idx - 1, 0), axis=axis)
    if boundary == "linear":
        edge = [slice(None)] * values.ndim
        inner = [slice(None)] * values.ndim
        edge[axis], inner[axis] = n - 1, n - 2
        plus[tuple(edge)] = 2 * values[tuple(edge)] - values[tuple(inner)]
        edge[axis], inner[axis] = 0, 1
        minus[tuple(edge)] = 2 * values[tuple(edge)] - values[tuple(inner)]
    return plus, minus


def central_gradient(grid: Grid, values: np.ndarray) -> np.ndarray:
    out = np.empty(values.shape + (grid.ndim,))
    for i, a in enumerate(grid.axes):
        plus, minus = _neighbours(values, i, a.boundary)
        out[..., i] = (plus - minus) / (2.0 * a.spacing)
    return out


def momentum_hull(grad: np.ndarray, inflation: float = 0.5):
    """Per-axis box containing the sampled gradients, inflated.

    Each half-width grows by ``inflation`` times the larger of its own
    half-width and the largest gradient component, so a degenerate (flat) hull
    still gets some room.
    """
    g = grad.reshape(-1, grad.shape[-1])
    lo, hi = g.min(axis=0), g.max(axis=0)
    centre, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    scale = max(float(np.max(np.abs(g))), 1e-12)
    half = half + inflation * np.maximum(half, scale)
    return centre - half, centre + half


def estimate_dissipation(grid: Grid, H: HamiltonianField, values: np.ndarray, params: SchemeParams = SchemeParams()) -> np.ndarray:
    """alpha_i = max |dH/dp_i| over grid nodes x momenta from the inflated gradient hull."""
    lo, hi = momentum_hull(central_gradient(grid, values), params.hull_inflation)
    d = grid.ndim
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(d, -1).T
    inner = lo + sobol(d, params.hull_samples, 7) * (hi - lo)
    momenta = np.vstack([corners, 0.5 * (lo + hi), inner])
    q = grid.mesh
    alpha = np.zeros(d)
    for p in momenta:
        g = H.grad_p(q, np.broadcast_to(p, q.shape))
        alpha = np.maximum(alpha, np.max(np.abs(g).reshape(-1, d), axis=0))
    if not np.all(np.isfinite(alpha)):
        raise NonFinite("dissipation estimate is not finite")
    return alpha


def max_stable_dt(grid: Grid, alpha, cfl: float) -> float:
    rate = float(np.sum(np.asarray(alpha) / grid.spacing))
    return np.inf if rate == 0 else cfl / rate


def _lf_update(grid: Grid, values: np.ndarray, H: HamiltonianField, alpha: np.ndarray, dt: float) -> np.ndarray:
    grad = np.empty(values.shape + (grid.ndim,))
    visc = np.zeros(values.shape)
    for i, a in enumerate(grid.axes):
        plus, minus = _neighbours(values, i, a.boundary)
        grad[..., i] = (plus - minus) / (2.0 * a.spacing)
        visc += 0.5 * alpha[i] * (plus - 2.0 * values + minus) / a.spacing
    ham = np.asarray(H(grid.mesh, grad), dtype=float)
    new = values - dt * (ham - visc)
    if not np.all(np.isfinite(new)):
        raise NonFinite("Lax-Friedrichs step produced non-finite values")
    return new


def lax_friedrichs_step(u: GridFunction, H: HamiltonianField, params: SchemeParams = SchemeParams(), dt: Optional[float] = None) -> GridFunction:
    """One forward-Euler Lax-Friedrichs step.

    u_j - dt [H(q_j, Dc u) - sum_i (alpha_i / 2)(u_{j+e_i} - 2 u_j + u_{j-e_i}) / dx_i]

    Raises:
        CFLViolation: dt exceeds cfl / sum(alpha_i / dx_i).
        NonFinite: the update overflowed.
    """
    grid = u.grid
    alpha = np.asarray(params.alpha if params.alpha is not None else estimate_dissipation(grid, H, u.values, params), dtype=float)
    bound = max_stable_dt(grid, alpha, params.cfl)
    dt = dt if dt is not None else params.dt
    if dt is None:
        if not np.isfinite(bound):
            raise CFLViolation("no dissipation and no dt: the step size is undetermined")
        dt = bound
    if dt < 0 or dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds the CFL bound {bound:.3e}")
    new = _lf_update(grid, u.values, H, alpha, dt)
    return GridFunction(grid, new, u.t + dt, {"dt": dt, "alpha": alpha.tolist()})


def solve_cp(grid: Grid, H: HamiltonianField, u0: Union[Callable, GridFunction, np.ndarray], T: float, params: SchemeParams = SchemeParams()) -> GridFunction:
    """March u0 to time T; the last step is shortened to land on T.

    ``u0`` may be a callable on points (shape (..., d)), an array of node
    values or a GridFunction. Dissipation coefficients are estimated once from
    u0 unless given; the final gradient hull is rechecked and a warning is
    logged if it escaped the estimate.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    if isinstance(u0, GridFunction):
        values = u0.values.copy()
    elif callable(u0):
        values = np.broadcast_to(np.asarray(u0(grid.mesh), dtype=float), grid.shape).copy()
    else:
        values = np.asarray(u0, dtype=float).reshape(grid.shape).copy()
    alpha = np.asarray(params.alpha if params.alpha is not None else estimate_dissipation(grid, H, values, params), dtype=float)
    bound = max_stable_dt(grid, alpha, params.cfl)
    dt = params.dt if params.dt is not None else bound
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds the CFL bound {bound:.3e}")
    steps = 0 if T == 0 else (1 if not np.isfinite(dt) else int(np.ceil(T / dt - 1e-9)))
    t = 0.0
    for k in range(steps):
        h = min(dt, T - t) if k == steps - 1 else dt
        values = _lf_update(grid, values, H, alpha, h)
        t = T if k == steps - 1 else t + h
    info = {
        "alpha": alpha.tolist(),
        "dt": float(dt) if np.isfinite(dt) else None,
        "steps": steps,
        "cfl": params.cfl,
        "boundary": [a.boundary for a in grid.axes],
    }
    if steps and params.alpha is None:
        after = estimate_dissipation(grid, H, values, SchemeParams(hull_inflation=0.0, hull_samples=1))
        info["alpha_final"] = after.tolist()
        if np.any(after > alpha * (1 + 1e-9) + 1e-14):
            log.warning("gradient hull left the dissipation estimate: %s > %s", after, alpha)
    return GridFunction(grid, values, float(T), info)


def chart_hamiltonian(M: Submanifold, chart: Chart, Hbar) -> HamiltonianField:
    """Pullback of Hbar to the m tangential chart coordinates.

    H^(x, p^) = Hbar(phi(x, 0), Pi dphi(x, 0)^{-T} (p^, 0)), Pi the projector
    onto T M at phi(x, 0).
    """
    m, d = chart.manifold_dim, chart.dim
    if d != M.ambient_dim or m != M.dim:
        raise ValueError("chart does not match the manifold dimensions")

    def lift(x, p):
        x, p = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
        X = chart.embed_tangential(x)
        chart.check_domain(X)
        A = np.broadcast_to(chart.jacobian(X), X.shape + (d,))
        w = np.linalg.solve(np.swapaxes(A, -1, -2), chart.embed_tangential(p)[..., None])[..., 0]
        q = chart.phi(X)
        P = projector_matrix(M, q)
        return q, np.einsum("...ij,...j->...i", P, w), A, P

    def func(x, p):
        q, w, _, _ = lift(x, p)
        return Hbar(q, w)

    dp = None
    grad_p = getattr(Hbar, "grad_p", None)
    if callable(grad_p):

        def dp(x, p):
            q, w, A, P = lift(x, p)
            g = np.einsum("...ij,...j->...i", P, grad_p(q, w))
            return np.linalg.solve(A, g[..., None])[..., 0][..., :m]

    return HamiltonianField(func=func, dim=m, name=f"chart[{getattr(Hbar, 'name', 'Hbar')}]", dp=dp)


def solve_cp_on_manifold(M: Submanifold, chart: Chart, Hbar, u0bar, T: float, grid: Grid, params: SchemeParams = SchemeParams()) -> GridFunction:
    """Solve the restricted problem in tangential chart coordinates.

    Args:
        Hbar: callable (q, p) on TM, e.g. from ``transfer.restrict_hamiltonian``.
        u0bar: callable on points of M (ambient coordinates), e.g.
            ``ManifoldFunction.at(0.0)``.
        grid: m-dimensional grid in chart coordinates; use periodic axes for
            closed curves.
    """
    if grid.ndim != M.dim:
        raise ValueError("chart grid dimension must equal the manifold dimension")
    Hc = chart_hamiltonian(M, chart, Hbar)
    pts = chart.manifold_point(grid.mesh)
    out = solve_cp(grid, Hc, np.asarray(u0bar(pts), dtype=float), T, params)
    out.info["chart"] = chart.name
    return out


def pde_residuals(u: Callable, H: HamiltonianField, points, times, step: float = 1e-5) -> np.ndarray:
    """|u_t + H(q, grad u)| with central differences, shape (len(times), n_points)."""
    q = np.atleast_2d(np.asarray(points, dtype=float))
    d = q.shape[-1]
    out = []
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        ut = (u(t + step, q) - u(t - step, q)) / (2 * step)
        grad = np.empty(q.shape)
        for i in range(d):
            e = np.zeros(d)
            e[i] = step
            grad[:, i] = (u(t, q + e) - u(t, q - e)) / (2 * step)
        out.append(np.abs(ut + H(q, grad)))
    return np.array(out)


def pde_residual(u: Callable, H: HamiltonianField, points, times, step: float = 1e-5) -> float:
    """sup |u_t + H(q, grad u)| over the sample points and times."""
    return float(np.max(pde_residuals(u, H, points, times, step)))
