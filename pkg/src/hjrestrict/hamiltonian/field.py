"""Hamiltonian functions on T R^d, their vector fields and flows."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..config import DEFAULT_TOLERANCES
from ..errors import NonFiniteGradient, StepRejected
from ..geometry.manifold import Chart

PhaseFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _fd_gradient(f: PhaseFn, q: np.ndarray, p: np.ndarray, wrt: str, rel_step: float) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    q, p = np.broadcast_arrays(q, p)
    x = q if wrt == "q" else p
    h = rel_step * (1.0 + np.linalg.norm(x, axis=-1))
    out = np.empty(x.shape)
    for i in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[i] = 1.0
        step = h[..., None] * e
        if wrt == "q":
            out[..., i] = (f(q + step, p) - f(q - step, p)) / (2.0 * h)
        else:
            out[..., i] = (f(q, p + step) - f(q, p - step)) / (2.0 * h)
    return out


@dataclass(frozen=True, eq=False)
class HamiltonianField:
    """A scalar function H(q, p) on R^d x R^d with gradient access.

    ``func`` must broadcast over leading axes. ``dq``/``dp`` are optional
    analytic gradients; without them central differences are used with step
    1e-6 (1 + |x|).
    """

    func: PhaseFn
    dim: int
    name: str = "H"
    dq: Optional[PhaseFn] = None
    dp: Optional[PhaseFn] = None

    def __call__(self, q, p) -> np.ndarray:
        return np.asarray(self.func(np.asarray(q, dtype=float), np.asarray(p, dtype=float)), dtype=float)

    def grad_q(self, q, p) -> np.ndarray:
        if self.dq is not None:
            q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
            return np.asarray(self.dq(q, p), dtype=float)
        return _fd_gradient(self.__call__, q, p, "q", DEFAULT_TOLERANCES.gradient_fd_step)

    def grad_p(self, q, p) -> np.ndarray:
        if self.dp is not None:
            q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
            return np.asarray(self.dp(q, p), dtype=float)
        return _fd_gradient(self.__call__, q, p, "p", DEFAULT_TOLERANCES.gradient_fd_step)

    def grad_q_fd(self, q, p) -> np.ndarray:
        return _fd_gradient(self.__call__, q, p, "q", DEFAULT_TOLERANCES.gradient_fd_step)

    def grad_p_fd(self, q, p) -> np.ndarray:
        return _fd_gradient(self.__call__, q, p, "p", DEFAULT_TOLERANCES.gradient_fd_step)


@dataclass(frozen=True)
class FlowState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))


def hamiltonian_vector_field(H: HamiltonianField, s: FlowState):
    """X_H(q, p) = (grad_p H, -grad_q H)."""
    dq = H.grad_p(s.q, s.p)
    dp = -H.grad_q(s.q, s.p)
    if not (np.all(np.isfinite(dq)) and np.all(np.isfinite(dp))):
        raise NonFiniteGradient(f"{H.name}: non-finite gradient at q={s.q}, p={s.p}")
    return dq, dp


def integrate_flow(H: HamiltonianField, s0: FlowState, t_end: float, dt: float) -> list[FlowState]:
    """Classical RK4 on X_H from s0.t to t_end; the last step is shortened to land on t_end."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < s0.t:
        raise ValueError("t_end must not precede the initial time")
    q, p, t = s0.q.copy(), s0.p.copy(), float(s0.t)
    out = [FlowState(q.copy(), p.copy(), t)]
    n_steps = int(np.ceil((t_end - t) / dt - 1e-12))

    def field(q, p):
        return hamiltonian_vector_field(H, FlowState(q, p))

    for i in range(n_steps):
        h = min(dt, t_end - t)
        k1q, k1p = field(q, p)
        k2q, k2p = field(q + 0.5 * h * k1q, p + 0.5 * h * k1p)
        k3q, k3p = field(q + 0.5 * h * k2q, p + 0.5 * h * k2p)
        k4q, k4p = field(q + h * k3q, p + h * k3p)
        q = q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        t = s0.t + (i + 1) * dt if i + 1 < n_steps else float(t_end)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise StepRejected(f"non-finite state at t={t}")
        out.append(FlowState(q.copy(), p.copy(), t))
    return out


def pullback_hamiltonian(H: HamiltonianField, chart: Chart, check_domain: bool = True) -> HamiltonianField:
    """H^(x, p) = H(phi(x), dphi(x)^{-T} p).

    dphi^{-1}(phi(x)) is the inverse of dphi(x), so the momentum transform is
    a transpose solve against the chart Jacobian. The p-gradient is the chain
    rule dphi(x)^{-1} grad_p H, exact whenever H has an analytic one.
    """
    if chart.dim != H.dim:
        raise ValueError("chart and Hamiltonian dimensions differ")

    def transform(x, p):
        x = np.asarray(x, dtype=float)
        if check_domain:
            chart.check_domain(x)
        A = chart.jacobian(x)
        x, p = np.broadcast_arrays(x, np.asarray(p, dtype=float))
        A = np.broadcast_to(A, x.shape + (x.shape[-1],))
        return chart.phi(x), np.linalg.solve(np.swapaxes(A, -1, -2), p[..., None])[..., 0], A

    def func(x, p):
        y, P, _ = transform(x, p)
        return H(y, P)

    dp = None
    if H.dp is not None:

        def dp(x, p):
            y, P, A = transform(x, p)
            return np.linalg.solve(A, H.grad_p(y, P)[..., None])[..., 0]

    return HamiltonianField(func=func, dim=H.dim, name=f"pullback[{H.name}]", dp=dp)
