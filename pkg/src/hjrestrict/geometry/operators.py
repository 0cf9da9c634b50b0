"""Projectors, second fundamental form, closest-point projection and v(q).

Implicit manifolds are handled fully vectorised over leading batch axes.
Parametric manifolds go through their charts.
"""

from __future__ import annotations

import numpy as np

from ..errors import (
    ChartDomain,
    NonUniqueProjection,
    NotNormal,
    NotOnManifold,
    NotTangent,
    OutsideTube,
    RankDeficient,
    SingularMap,
)
from .manifold import Submanifold, TangentFrame


def _as_points(M: Submanifold, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != M.ambient_dim:
        raise ValueError(f"expected trailing dimension {M.ambient_dim}, got shape {q.shape}")
    return q


def _implicit_hessian(M: Submanifold, q: np.ndarray) -> np.ndarray:
    if M.rep.hessian is not None:
        return np.asarray(M.rep.hessian(q), dtype=float)
    # central differences of the Jacobian
    d = M.ambient_dim
    step = M.tol.gradient_fd_step * (1.0 + np.linalg.norm(q, axis=-1))[..., None, None]
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        h = step[..., 0, 0][..., None]
        cols.append((M.rep.jacobian(q + h * e) - M.rep.jacobian(q - h * e)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def _implicit_projector(M: Submanifold, q: np.ndarray, check_rank: bool = True) -> np.ndarray:
    """I - J^+ J evaluated at any point where dF has full rank (not only on M)."""
    J = np.asarray(M.rep.jacobian(q), dtype=float)
    if check_rank:
        sv = np.linalg.svd(J, compute_uv=False)
        if np.any(sv[..., -1] <= M.tol.rank):
            raise RankDeficient(f"{M.name}: dF lost rank (smallest singular value {np.min(sv[..., -1]):.3e})")
    gram = J @ np.swapaxes(J, -1, -2)
    normal_proj = np.swapaxes(J, -1, -2) @ np.linalg.solve(gram, J)
    return np.eye(M.ambient_dim) - normal_proj


def _chart_tangent_columns(M: Submanifold, q: np.ndarray):
    chart = M.locate_chart(q)
    x = chart.inverse(q)
    xt = x[..., : M.dim]
    Jt = chart.jacobian(chart.embed_tangential(xt))[..., :, : M.dim]
    return chart, xt, Jt


def _column_projector(Jt: np.ndarray) -> np.ndarray:
    gram = np.swapaxes(Jt, -1, -2) @ Jt
    return Jt @ np.linalg.solve(gram, np.swapaxes(Jt, -1, -2))


def projector_matrix(M: Submanifold, q) -> np.ndarray:
    """Orthogonal projector Pi_q onto T_qM for q on M.

    Implicit manifolds use I - J^+ J with J = dF(q); parametric manifolds
    orthogonally project onto the span of the tangential chart columns.

    Raises:
        NotOnManifold: if q is farther than the on-manifold tolerance from M.
        RankDeficient: if dF(q) is not of full rank.
    """
    q = _as_points(M, q)
    M.require_on_manifold(q)
    if M.is_implicit:
        return _implicit_projector(M, q)
    _, _, Jt = _chart_tangent_columns(M, q)
    return _column_projector(Jt)


def normal_projector(M: Submanifold, q) -> np.ndarray:
    return np.eye(M.ambient_dim) - projector_matrix(M, q)


def _require_tangent(M, P, v, what="vector"):
    v = np.asarray(v, dtype=float)
    normal_part = v - np.einsum("...ij,...j->...i", P, v)
    bad = np.linalg.norm(normal_part, axis=-1) > M.tol.tangency * np.maximum(np.linalg.norm(v, axis=-1), 1e-300)
    bad &= np.linalg.norm(normal_part, axis=-1) > 0.0
    if np.any(bad):
        raise NotTangent(f"{what} has a normal component above tolerance")
    return v


def _require_normal(M, P, n, what="vector"):
    n = np.asarray(n, dtype=float)
    tangent_part = np.einsum("...ij,...j->...i", P, n)
    tnorm = np.linalg.norm(tangent_part, axis=-1)
    if np.any((tnorm > M.tol.tangency * np.linalg.norm(n, axis=-1)) & (tnorm > 0.0)):
        raise NotNormal(f"{what} has a tangential component above tolerance")
    return n


def _projector_derivative_analytic(M, q, v):
    J = np.asarray(M.rep.jacobian(q), dtype=float)
    Hs = _implicit_hessian(M, q)
    dJ = np.einsum("...kij,...j->...ki", Hs, v)
    A = np.swapaxes(J, -1, -2)
    dA = np.swapaxes(dJ, -1, -2)
    A_pinv = np.linalg.solve(J @ A, J)
    P = A @ A_pinv
    comp = np.eye(M.ambient_dim) - P
    dP = comp @ dA @ A_pinv
    dP = dP + np.swapaxes(dP, -1, -2)
    return -dP


def _projector_derivative_fd(M, q, v):
    vnorm = np.linalg.norm(v, axis=-1)[..., None, None]
    safe = np.where(vnorm > 0, vnorm, 1.0)
    h = M.tol.projector_fd_step * (1.0 + np.linalg.norm(q, axis=-1))[..., None, None]
    if M.is_implicit:
        direction = v / safe[..., 0]
        step = h[..., 0]
        plus = _implicit_projector(M, q + step * direction, check_rank=False)
        minus = _implicit_projector(M, q - step * direction, check_rank=False)
    else:
        # along the chart curve s -> phi(x + s c, 0) with velocity v
        chart, xt, Jt = _chart_tangent_columns(M, q)
        rhs = np.einsum("...ji,...j->...i", Jt, v / safe[..., 0])
        c = np.linalg.solve(np.swapaxes(Jt, -1, -2) @ Jt, rhs[..., None])[..., 0]
        step = h[..., 0]

        def proj_at(x):
            cols = chart.jacobian(chart.embed_tangential(x))[..., :, : M.dim]
            return _column_projector(cols)

        plus = proj_at(xt + step * c)
        minus = proj_at(xt - step * c)
    deriv = (plus - minus) / (2.0 * h)
    return np.where(vnorm > 0, deriv * vnorm, 0.0)


def projector_derivative(M: Submanifold, q, v, method: str = "auto") -> np.ndarray:
    """Directional derivative dPi_q(v) as a (d, d) matrix.

    ``method`` is "analytic" (implicit manifolds with a Hessian), "fd"
    (central differences, step 1e-4 (1 + |q|)) or "auto".
    """
    q = _as_points(M, q)
    v = np.asarray(v, dtype=float)
    if method == "auto":
        method = "analytic" if M.is_implicit and M.rep.hessian is not None else "fd"
    if method == "analytic":
        if not M.is_implicit:
            raise ValueError("analytic projector derivative needs an implicit representation")
        return _projector_derivative_analytic(M, q, v)
    if method == "fd":
        return _projector_derivative_fd(M, q, v)
    raise ValueError(f"unknown method {method!r}")


def second_fundamental_form(M: Submanifold, q, v, w, method: str = "auto") -> np.ndarray:
    """h_q(v, w) = dPi_q(v) w, a normal vector for tangent v, w."""
    q = _as_points(M, q)
    P = projector_matrix(M, q)
    v = _require_tangent(M, P, v, "v")
    w = _require_tangent(M, P, w, "w")
    dP = projector_derivative(M, q, v, method=method)
    return np.einsum("...ij,...j->...i", dP, w)


def weingarten_adjoint(M: Submanifold, q, a, n, method: str = "auto") -> np.ndarray:
    """h*_q(a, n) = dPi_q(a) n, the tangent-valued adjoint of h_q(a, .)."""
    q = _as_points(M, q)
    P = projector_matrix(M, q)
    a = _require_tangent(M, P, a, "a")
    n = _require_normal(M, P, n, "n")
    dP = projector_derivative(M, q, a, method=method)
    return np.einsum("...ij,...j->...i", dP, n)


def tangent_frame(M: Submanifold, q) -> TangentFrame:
    """Orthonormal tangent/normal bases from pivoted Gram-Schmidt on projector columns.

    The pivot is the remaining column of largest norm (first index on ties),
    so the frame is reproducible.
    """
    q = _as_points(M, q)
    if q.ndim != 1:
        raise ValueError("tangent_frame takes a single point")
    P = projector_matrix(M, q)
    tangent = _pivoted_gram_schmidt(P, M.dim, M)
    normal = _pivoted_gram_schmidt(np.eye(M.ambient_dim) - P, M.codim, M)
    return TangentFrame(base=q.copy(), tangent=tangent, normal=normal)


def _pivoted_gram_schmidt(P: np.ndarray, count: int, M: Submanifold) -> np.ndarray:
    residual = P.copy()
    basis = []
    for _ in range(count):
        norms = np.linalg.norm(residual, axis=0)
        j = int(np.argmax(norms))
        if norms[j] <= 1e-8:
            raise RankDeficient(f"{M.name}: projector has rank below {count}")
        e = residual[:, j] / norms[j]
        for b in basis:
            e = e - (b @ e) * b
        e = e / np.linalg.norm(e)
        basis.append(e)
        residual = residual - np.outer(e, e @ residual)
    return np.array(basis).reshape(count, P.shape[0])


def project_onto(M: Submanifold, x, max_iter: int = 50):
    """Gauss-Newton x <- x - J^+ F(x) onto F = 0 (not the closest point).

    Returns the projected points and a mask of the ones that converged.
    """
    x = np.array(x, dtype=float)
    ok = np.zeros(x.shape[:-1], dtype=bool)
    for _ in range(max_iter):
        F = M.rep.constraint(x)
        ok = np.linalg.norm(F, axis=-1) <= M.tol.newton_residual
        if np.all(ok):
            break
        J = M.rep.jacobian(x)
        with np.errstate(all="ignore"):
            try:
                step = np.swapaxes(J, -1, -2) @ np.linalg.solve(J @ np.swapaxes(J, -1, -2), F[..., None])
            except np.linalg.LinAlgError:
                step = np.linalg.pinv(J) @ F[..., None]
        step = np.where(ok[..., None], 0.0, step[..., 0])
        x = x - step
        bad = ~np.all(np.isfinite(x), axis=-1)
        x[bad] = 0.0
    ok &= np.all(np.isfinite(x), axis=-1)
    return x, ok


def _lagrange_newton(M: Submanifold, Q: np.ndarray, X0: np.ndarray):
    """Newton on {x - q + J(x)^T lam = 0, F(x) = 0}; returns (x, converged)."""
    tol = M.tol
    d = M.ambient_dim
    X = X0.copy()
    J = np.asarray(M.rep.jacobian(X), dtype=float)
    k = J.shape[-2]
    with np.errstate(all="ignore"):
        lam = np.einsum("nkd,nd->nk", np.linalg.pinv(np.swapaxes(J, -1, -2)), Q - X)
    lam = np.where(np.isfinite(lam), lam, 0.0)
    scale = 1.0 + np.linalg.norm(Q, axis=-1)
    failed = np.zeros(len(Q), dtype=bool)
    prev = np.full(len(Q), np.inf)
    for _ in range(tol.newton_max_iter + 1):
        with np.errstate(all="ignore"):
            F = np.asarray(M.rep.constraint(X), dtype=float)
            J = np.asarray(M.rep.jacobian(X), dtype=float)
            r1 = X - Q + np.einsum("nkd,nk->nd", J, lam)
            res = np.maximum(np.linalg.norm(r1, axis=-1) / scale, np.linalg.norm(F, axis=-1))
        failed |= ~np.isfinite(res)
        converged = (res <= tol.newton_residual) & ~failed
        # keep polishing converged points while the residual still drops
        active = ~failed & (res > 1e-3 * tol.newton_residual) & ~(converged & (res > 0.5 * prev))
        prev = np.where(active, res, prev)
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        Hs = _implicit_hessian(M, X[idx])
        K = np.zeros((len(idx), d + k, d + k))
        K[:, :d, :d] = np.eye(d) + np.einsum("nk,nkij->nij", lam[idx], Hs)
        K[:, :d, d:] = np.swapaxes(J[idx], -1, -2)
        K[:, d:, :d] = J[idx]
        rhs = -np.concatenate([r1[idx], F[idx]], axis=-1)
        with np.errstate(all="ignore"):
            try:
                delta = np.linalg.solve(K, rhs[..., None])[..., 0]
            except np.linalg.LinAlgError:
                delta = np.einsum("nij,nj->ni", np.linalg.pinv(K), rhs)
        X[idx] += delta[:, :d]
        lam[idx] += delta[:, d:]
    converged &= np.all(np.isfinite(X), axis=-1)
    if np.any(converged):
        c = np.flatnonzero(converged)
        P = _implicit_projector(M, X[c], check_rank=False)
        orth = np.linalg.norm(np.einsum("nij,nj->ni", P, Q[c] - X[c]), axis=-1)
        converged[c] = orth <= tol.orthogonality * scale[c]
    return X, converged


def _closest_implicit(M: Submanifold, Q: np.ndarray) -> np.ndarray:
    tol = M.tol
    cloud = M.cloud
    k = min(3, len(cloud))
    _, idx = M.cloud_tree.query(Q, k=k)
    idx = np.asarray(idx).reshape(len(Q), k)
    starts = [Q.copy()] + [cloud[idx[:, j]] for j in range(k)]
    sols, oks = zip(*(_lagrange_newton(M, Q, X0) for X0 in starts))
    sols = np.stack(sols)
    oks = np.stack(oks)
    dist = np.where(oks, np.linalg.norm(sols - Q[None], axis=-1), np.inf)
    best = np.argmin(dist, axis=0)
    cols = np.arange(len(Q))
    X = sols[best, cols]
    dbest = dist[best, cols]
    if np.any(~np.isfinite(dbest)):
        bad = int(np.flatnonzero(~np.isfinite(dbest))[0])
        raise OutsideTube(f"{M.name}: Newton did not converge for point {Q[bad]}")
    separation = np.linalg.norm(sols - X[None], axis=-1)
    tie = oks & (separation > tol.distinct_points) & (np.abs(dist - dbest[None]) <= tol.non_unique)
    if np.any(tie):
        bad = int(np.flatnonzero(np.any(tie, axis=0))[0])
        raise NonUniqueProjection(f"{M.name}: point {Q[bad]} has several closest points")
    return X


def _closest_parametric(M: Submanifold, Q: np.ndarray) -> np.ndarray:
    tol = M.tol
    out = np.empty_like(Q)
    for i, q in enumerate(Q):
        try:
            chart = M.locate_chart(q)
        except ChartDomain as exc:
            raise OutsideTube(f"{M.name}: no chart covers {q}") from exc
        x = chart.inverse(q)[: M.dim].copy()
        scale = 1.0 + np.linalg.norm(q)
        for _ in range(4 * tol.newton_max_iter):
            y = chart.manifold_point(x)
            Jt = chart.jacobian(chart.embed_tangential(x))[:, : M.dim]
            g = Jt.T @ (y - q)
            if np.linalg.norm(g) <= tol.newton_residual * scale:
                break
            x = x + np.linalg.lstsq(Jt, q - y, rcond=None)[0]
        else:
            raise OutsideTube(f"{M.name}: Gauss-Newton did not converge for point {q}")
        out[i] = chart.manifold_point(x)
    return out


def closest_point(M: Submanifold, q) -> np.ndarray:
    """Closest point pi_M(q) for points strictly inside the tube dist < theta.

    Implicit manifolds: Newton on the Lagrange system, started from q itself
    and from the three nearest points of the manifold's start cloud.

    Raises:
        OutsideTube: Newton failure or dist(q, M) >= theta.
        NonUniqueProjection: distinct converged points at equal distance.
    """
    q = _as_points(M, q)
    Q = q.reshape(-1, M.ambient_dim)
    if not np.all(np.isfinite(Q)):
        raise OutsideTube("non-finite point")
    X = _closest_implicit(M, Q) if M.is_implicit else _closest_parametric(M, Q)
    dist = np.linalg.norm(Q - X, axis=-1)
    if np.any(dist >= M.theta):
        bad = int(np.flatnonzero(dist >= M.theta)[0])
        raise OutsideTube(f"{M.name}: dist {dist[bad]:.6g} >= theta {M.theta:g} at {Q[bad]}")
    return X.reshape(q.shape)


def distance(M: Submanifold, q) -> np.ndarray:
    q = _as_points(M, q)
    return np.linalg.norm(q - closest_point(M, q), axis=-1)


def _v_inverse_at(M: Submanifold, q, qt, p) -> np.ndarray:
    P = projector_matrix(M, qt)
    p = _require_tangent(M, P, p, "p")
    offset = np.asarray(q, dtype=float) - qt
    dP = projector_derivative(M, qt, p)
    return p - np.einsum("...ij,...j->...i", dP, offset)


def v_inverse_apply(M: Submanifold, q, p) -> np.ndarray:
    """v(q)^{-1} p = p - h*_{q~}(p, q - q~) for p tangent at q~ = pi_M(q)."""
    q = _as_points(M, q)
    qt = closest_point(M, q)
    return _v_inverse_at(M, q, qt, p)


def v_inverse_matrix(M: Submanifold, q):
    """Matrix of v(q)^{-1} in the tangent frame at pi_M(q); returns (frame, matrix)."""
    q = _as_points(M, q)
    if q.ndim != 1:
        raise ValueError("v_inverse_matrix takes a single point")
    qt = closest_point(M, q)
    frame = tangent_frame(M, qt)
    images = np.array([_v_inverse_at(M, q, qt, e) for e in frame.tangent])
    return frame, frame.tangent @ images.T


def v_apply(M: Submanifold, q, p) -> np.ndarray:
    """v(q) p, obtained by solving against the assembled matrix of v(q)^{-1}.

    Raises:
        SingularMap: if the assembled matrix is numerically singular.
    """
    q = _as_points(M, q)
    p = np.asarray(p, dtype=float)
    if q.ndim > 1:
        return np.stack([v_apply(M, qi, pi) for qi, pi in zip(q.reshape(-1, q.shape[-1]), np.broadcast_to(p, q.shape).reshape(-1, q.shape[-1]))]).reshape(q.shape)
    frame, V = v_inverse_matrix(M, q)
    _require_tangent(M, frame.projector(), p, "p")
    if not np.all(np.isfinite(V)) or np.linalg.cond(V) > M.tol.singular_cond:
        raise SingularMap(f"{M.name}: v(q)^(-1) is singular at {q}")
    coeffs = np.linalg.solve(V, frame.coordinates(p))
    return frame.from_coordinates(coeffs)


__all__ = [
    "NotOnManifold",
    "closest_point",
    "distance",
    "normal_projector",
    "project_onto",
    "projector_derivative",
    "projector_matrix",
    "second_fundamental_form",
    "tangent_frame",
    "v_apply",
    "v_inverse_apply",
    "v_inverse_matrix",
    "weingarten_adjoint",
]
