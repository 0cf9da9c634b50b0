"""Grid refinement studies against exact or brute-force reference solutions."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..hamiltonian.field import HamiltonianField
from .grid import Grid
from .scheme import SchemeParams, solve_cp

SATURATION_LEVEL = 1e-11


@dataclass
class ConvergenceProblem:
    """u_t + H(q, grad u) = 0 with a reference solution ``exact(t, points)``.

    ``margin`` is the distance from non-periodic boundaries excluded from the
    error (the grid truncates R^d). The default T * alpha_i per axis covers
    everything boundary data can reach, since alpha_i bounds |dH/dp_i|.
    """

    hamiltonian: HamiltonianField
    initial: Callable[[np.ndarray], np.ndarray]
    exact: Callable[[float, np.ndarray], np.ndarray]
    T: float
    margin: Optional[float] = None
    params: SchemeParams = field(default_factory=SchemeParams)
    name: str = "problem"


@dataclass(frozen=True)
class ConvergenceRow:
    shape: tuple
    dx: float
    error: float
    order: Optional[float]
    saturated: bool = False
    steps: int = 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["shape"] = list(self.shape)
        return out


def linf_error(gf, exact: Callable, margin=0.0) -> float:
    mask = gf.grid.interior_mask(margin)
    ref = np.broadcast_to(exact(gf.t, gf.grid.mesh), gf.grid.shape)
    return float(np.max(np.abs(gf.values - ref)[mask]))


def convergence_study(problem: ConvergenceProblem, grids: Sequence[Grid]) -> list[ConvergenceRow]:
    """Solve on each grid and report (dx, L-inf error, observed order).

    The order between consecutive grids is log(e_coarse / e_fine) / log(dx_coarse / dx_fine),
    which is log2 of the error ratio for halved spacing. When both errors are
    below round-off level the order is reported as saturated (None).
    """
    rows: list[ConvergenceRow] = []
    for g in grids:
        gf = solve_cp(g, problem.hamiltonian, problem.initial, problem.T, problem.params)
        margin = problem.margin
        if margin is None:
            margin = problem.T * np.asarray(gf.info["alpha"])
        err = linf_error(gf, problem.exact, margin)
        dx = float(np.max(g.spacing))
        order, saturated = None, False
        if rows:
            prev = rows[-1]
            if err <= SATURATION_LEVEL and prev.error <= SATURATION_LEVEL:
                saturated = True
            elif err > 0 and prev.error > 0:
                order = float(np.log(prev.error / err) / np.log(prev.dx / dx))
        elif err <= SATURATION_LEVEL:
            saturated = True
        rows.append(ConvergenceRow(g.shape, dx, err, order, saturated, gf.info.get("steps", 0)))
    return rows


def hopf_lax_abs(u0: Callable[[np.ndarray], np.ndarray], t: float, points, samples: int = 4001) -> np.ndarray:
    """u(t, q) = min_{|y - q| <= t} u0(y) in one dimension, by brute-force minimisation.

    The reference solution of u_t + |u_q| = 0; ``samples`` equally spaced y
    per point cover [q - t, q + t] including both ends.
    """
    q = np.asarray(points, dtype=float)
    shape = q.shape[:-1] if q.ndim and q.shape[-1] == 1 else q.shape
    flat = q.reshape(-1)
    if t == 0:
        return np.asarray(u0(flat[:, None]), dtype=float).reshape(shape)
    offsets = np.linspace(-t, t, samples)
    out = np.empty(flat.shape)
    for start in range(0, len(flat), 256):
        y = flat[start : start + 256, None] + offsets[None, :]
        out[start : start + 256] = np.min(np.asarray(u0(y[..., None]), dtype=float), axis=-1)
    return out.reshape(shape)
