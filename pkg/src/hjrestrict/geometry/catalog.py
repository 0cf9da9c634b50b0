"""Built-in manifolds (flat, circle, sphere, torus) and adapted charts."""

from __future__ import annotations

import numpy as np

from .manifold import Chart, ImplicitRep, ParametricRep, Submanifold

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------- charts


def identity_chart(d: int, m: int | None = None) -> Chart:
    m = d if m is None else m
    eye = np.eye(d)
    return Chart(
        phi=lambda x: np.array(x, dtype=float),
        jacobian=lambda x: np.broadcast_to(eye, np.shape(x)[:-1] + (d, d)).copy(),
        inverse=lambda q: np.array(q, dtype=float),
        dim=d,
        manifold_dim=m,
        name="identity",
    )


def rotation_chart(angle: float, m: int = 2) -> Chart:
    """Rigid rotation of the plane, x -> R(angle) x."""
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return Chart(
        phi=lambda x: np.asarray(x, dtype=float) @ R.T,
        jacobian=lambda x: np.broadcast_to(R, np.shape(x)[:-1] + (2, 2)).copy(),
        inverse=lambda q: np.asarray(q, dtype=float) @ R,
        dim=2,
        manifold_dim=m,
        name=f"rotation({angle:g})",
    )


def polar_chart(r: float = 1.0) -> Chart:
    """(theta, s) -> (r + s)(cos theta, sin theta); s = 0 is the circle of radius r."""

    def phi(x):
        x = np.asarray(x, dtype=float)
        rho = r + x[..., 1]
        return np.stack([rho * np.cos(x[..., 0]), rho * np.sin(x[..., 0])], axis=-1)

    def jac(x):
        x = np.asarray(x, dtype=float)
        th, rho = x[..., 0], r + x[..., 1]
        c, s = np.cos(th), np.sin(th)
        return np.stack([np.stack([-rho * s, c], axis=-1), np.stack([rho * c, s], axis=-1)], axis=-2)

    def inverse(q):
        q = np.asarray(q, dtype=float)
        th = np.mod(np.arctan2(q[..., 1], q[..., 0]), TWO_PI)
        return np.stack([th, np.hypot(q[..., 0], q[..., 1]) - r], axis=-1)

    return Chart(
        phi=phi,
        jacobian=jac,
        inverse=inverse,
        dim=2,
        manifold_dim=1,
        name=f"polar({r:g})",
        domain=lambda x: np.asarray(x)[..., 1] > -r,
        periods=(TWO_PI,),
    )


def spherical_chart(r: float = 1.0) -> Chart:
    """(polar angle, azimuth, s) -> (r + s) * unit vector; singular at the poles."""

    def phi(x):
        x = np.asarray(x, dtype=float)
        th, ph, rho = x[..., 0], x[..., 1], r + x[..., 2]
        return np.stack(
            [rho * np.sin(th) * np.cos(ph), rho * np.sin(th) * np.sin(ph), rho * np.cos(th)], axis=-1
        )

    def jac(x):
        x = np.asarray(x, dtype=float)
        th, ph, rho = x[..., 0], x[..., 1], r + x[..., 2]
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        d_th = np.stack([rho * ct * cp, rho * ct * sp, -rho * st], axis=-1)
        d_ph = np.stack([-rho * st * sp, rho * st * cp, np.zeros_like(th)], axis=-1)
        d_s = np.stack([st * cp, st * sp, ct], axis=-1)
        return np.stack([d_th, d_ph, d_s], axis=-1)

    def inverse(q):
        q = np.asarray(q, dtype=float)
        rho = np.linalg.norm(q, axis=-1)
        th = np.arccos(np.clip(q[..., 2] / np.where(rho > 0, rho, 1.0), -1.0, 1.0))
        ph = np.mod(np.arctan2(q[..., 1], q[..., 0]), TWO_PI)
        return np.stack([th, ph, rho - r], axis=-1)

    def domain(x):
        x = np.asarray(x)
        return (x[..., 0] > 0) & (x[..., 0] < np.pi) & (x[..., 2] > -r)

    return Chart(phi, jac, inverse, 3, 2, f"spherical({r:g})", domain, (None, TWO_PI))


def torus_chart(R: float = 2.0, r: float = 1.0) -> Chart:
    """(u, v, s) -> ((R + (r+s) cos v) cos u, (R + (r+s) cos v) sin u, (r+s) sin v)."""

    def phi(x):
        x = np.asarray(x, dtype=float)
        u, v, rho = x[..., 0], x[..., 1], r + x[..., 2]
        w = R + rho * np.cos(v)
        return np.stack([w * np.cos(u), w * np.sin(u), rho * np.sin(v)], axis=-1)

    def jac(x):
        x = np.asarray(x, dtype=float)
        u, v, rho = x[..., 0], x[..., 1], r + x[..., 2]
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        w = R + rho * cv
        d_u = np.stack([-w * su, w * cu, np.zeros_like(u)], axis=-1)
        d_v = np.stack([-rho * sv * cu, -rho * sv * su, rho * cv], axis=-1)
        d_s = np.stack([cv * cu, cv * su, sv], axis=-1)
        return np.stack([d_u, d_v, d_s], axis=-1)

    def inverse(q):
        q = np.asarray(q, dtype=float)
        u = np.mod(np.arctan2(q[..., 1], q[..., 0]), TWO_PI)
        radial = np.hypot(q[..., 0], q[..., 1]) - R
        v = np.mod(np.arctan2(q[..., 2], radial), TWO_PI)
        return np.stack([u, v, np.hypot(radial, q[..., 2]) - r], axis=-1)

    def domain(x):
        x = np.asarray(x)
        rho = r + x[..., 2]
        return (rho > 0) & (R + rho * np.cos(x[..., 1]) > 0)

    return Chart(phi, jac, inverse, 3, 2, f"torus_chart({R:g},{r:g})", domain, (TWO_PI, TWO_PI))


# ------------------------------------------------------------------ manifolds


def flat(m: int, d: int, extent: float = 1.0, theta: float = 1e6) -> Submanifold:
    """R^m x {0} in R^d, F(q) = q[m:]."""
    k = d - m
    J = np.hstack([np.zeros((k, m)), np.eye(k)])

    def sampler(u):
        u = np.asarray(u, dtype=float)
        pad = np.zeros(u.shape[:-1] + (k,))
        return np.concatenate([extent * (2.0 * u - 1.0), pad], axis=-1)

    return Submanifold(
        dim=m,
        ambient_dim=d,
        rep=ImplicitRep(
            constraint=lambda q: np.asarray(q, dtype=float)[..., m:],
            jacobian=lambda q: np.broadcast_to(J, np.shape(q)[:-1] + J.shape).copy(),
            hessian=lambda q: np.zeros(np.shape(q)[:-1] + (k, d, d)),
        ),
        theta=theta,
        name=f"flat({m},{d})",
        sampler=sampler if m > 0 else None,
        bbox=np.array([[-extent, extent]] * d),
        charts=(identity_chart(d, m),),
    )


def _round_sphere_rep(r: float, d: int) -> ImplicitRep:
    eye2 = 2.0 * np.eye(d)
    return ImplicitRep(
        constraint=lambda q: (np.sum(np.asarray(q, dtype=float) ** 2, axis=-1) - r * r)[..., None],
        jacobian=lambda q: 2.0 * np.asarray(q, dtype=float)[..., None, :],
        hessian=lambda q: np.broadcast_to(eye2, np.shape(q)[:-1] + (1, d, d)).copy(),
    )


def circle(r: float = 1.0, parametric: bool = False) -> Submanifold:
    """Circle of radius r in R^2; reach r."""
    chart = polar_chart(r)
    rep = ParametricRep((chart,)) if parametric else _round_sphere_rep(r, 2)
    return Submanifold(
        dim=1,
        ambient_dim=2,
        rep=rep,
        theta=r,
        name=f"circle({r:g})",
        sampler=lambda u: chart.manifold_point(TWO_PI * np.asarray(u)),
        charts=(chart,),
    )


def sphere(r: float = 1.0, d: int = 3) -> Submanifold:
    """Round sphere S^{d-1}(r) in R^d; reach r."""

    def sampler(u):
        # area-uniform for d = 3, otherwise Gaussian directions via the inverse normal CDF
        u = np.asarray(u, dtype=float)
        if d == 3:
            z = 1.0 - 2.0 * u[..., 0]
            ph = TWO_PI * u[..., 1]
            s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
            return r * np.stack([s * np.cos(ph), s * np.sin(ph), z], axis=-1)
        from scipy.stats import norm

        g = norm.ppf(np.clip(np.concatenate([u, u[..., :1] * 0.5 + 0.25], axis=-1), 1e-12, 1 - 1e-12))
        return r * g / np.linalg.norm(g, axis=-1, keepdims=True)

    return Submanifold(
        dim=d - 1,
        ambient_dim=d,
        rep=_round_sphere_rep(r, d),
        theta=r,
        name=f"sphere({r:g},{d})",
        sampler=sampler,
        charts=(spherical_chart(r),) if d == 3 else (),
    )


def torus(R: float = 2.0, r: float = 1.0) -> Submanifold:
    """Torus of revolution in R^3 with F = (sqrt(x^2+y^2) - R)^2 + z^2 - r^2; reach min(r, R - r)."""
    if not R > r > 0:
        raise ValueError("torus needs R > r > 0")

    def constraint(q):
        q = np.asarray(q, dtype=float)
        rho = np.hypot(q[..., 0], q[..., 1])
        return ((rho - R) ** 2 + q[..., 2] ** 2 - r * r)[..., None]

    def jacobian(q):
        q = np.asarray(q, dtype=float)
        rho = np.hypot(q[..., 0], q[..., 1])
        c = 2.0 * (rho - R) / rho
        return np.stack([c * q[..., 0], c * q[..., 1], 2.0 * q[..., 2]], axis=-1)[..., None, :]

    def hessian(q):
        q = np.asarray(q, dtype=float)
        x, y = q[..., 0], q[..., 1]
        rho = np.hypot(x, y)
        rho3 = rho**3
        hxx = 2.0 - 2.0 * R * (1.0 / rho - x * x / rho3)
        hyy = 2.0 - 2.0 * R * (1.0 / rho - y * y / rho3)
        hxy = 2.0 * R * x * y / rho3
        zero = np.zeros_like(x)
        two = np.full_like(x, 2.0)
        H = np.stack(
            [np.stack([hxx, hxy, zero], -1), np.stack([hxy, hyy, zero], -1), np.stack([zero, zero, two], -1)],
            axis=-2,
        )
        return H[..., None, :, :]

    chart = torus_chart(R, r)
    return Submanifold(
        dim=2,
        ambient_dim=3,
        rep=ImplicitRep(constraint, jacobian, hessian),
        theta=min(r, R - r),
        name=f"torus({R:g},{r:g})",
        sampler=lambda u: chart.manifold_point(TWO_PI * np.asarray(u)),
        charts=(chart,),
    )


MANIFOLDS = {
    "flat": flat,
    "circle": circle,
    "sphere": sphere,
    "torus": torus,
}

CHARTS = {
    "identity": identity_chart,
    "rotation": rotation_chart,
    "polar": polar_chart,
    "spherical": spherical_chart,
    "torus": torus_chart,
}
