import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjrestrict.errors import NotOnManifold, NotTangent, OutsideTube
from hjrestrict.geometry import (
    circle,
    closest_point,
    flat,
    identity_chart,
    polar_chart,
    projector_matrix,
    rotation_chart,
    second_fundamental_form,
    sphere,
    tangent_frame,
    torus,
    v_apply,
    v_inverse_apply,
    v_inverse_matrix,
    weingarten_adjoint,
)

CATALOG = [flat(1, 2), flat(2, 3), circle(), sphere(), torus()]
IDS = ["flat12", "flat23", "circle", "sphere", "torus"]


def _random_tangent(M, q, rng):
    P = projector_matrix(M, q)
    return P @ rng.standard_normal(M.ambient_dim)


def _random_normal(M, q, rng):
    P = projector_matrix(M, q)
    v = rng.standard_normal(M.ambient_dim)
    return v - P @ v


# ---- examples ------------------------------------------------------------


def test_projector_examples():
    np.testing.assert_allclose(projector_matrix(flat(1, 2), [0.3, 0.0]), [[1, 0], [0, 0]], atol=1e-14)
    np.testing.assert_allclose(projector_matrix(circle(), [1.0, 0.0]), [[0, 0], [0, 1]], atol=1e-12)
    np.testing.assert_allclose(projector_matrix(sphere(), [0, 0, 1.0]), np.diag([1, 1, 0]), atol=1e-12)


def test_projector_off_manifold_rejected():
    with pytest.raises(NotOnManifold):
        projector_matrix(circle(), [1.1, 0.0])


def test_second_fundamental_form_examples():
    assert np.allclose(second_fundamental_form(flat(1, 2), [0.2, 0.0], [1.0, 0], [2.0, 0]), 0.0, atol=1e-12)
    h = second_fundamental_form(circle(), [1.0, 0.0], [0, 1.0], [0, 1.0])
    np.testing.assert_allclose(h, [-1.0, 0.0], atol=1e-6)
    h = second_fundamental_form(sphere(), [0, 0, 1.0], [1.0, 0, 0], [0, 1.0, 0])
    np.testing.assert_allclose(h, [0, 0, 0], atol=1e-6)


def test_second_fundamental_form_rejects_normal_input():
    with pytest.raises(NotTangent):
        second_fundamental_form(circle(), [1.0, 0.0], [1.0, 0.0], [0.0, 1.0])


def test_weingarten_examples():
    assert np.allclose(weingarten_adjoint(flat(1, 2), [0.0, 0.0], [1.0, 0], [0, 3.0]), 0.0, atol=1e-12)
    np.testing.assert_allclose(weingarten_adjoint(circle(), [1.0, 0.0], [0, 1.0], [0.5, 0]), [0, -0.5], atol=1e-6)
    np.testing.assert_allclose(weingarten_adjoint(sphere(), [0, 0, 1.0], [1.0, 0, 0], [0, 0, 2.0]), [-2, 0, 0], atol=1e-6)


def test_closest_point_examples():
    np.testing.assert_allclose(closest_point(flat(1, 2), [0.3, 0.7]), [0.3, 0.0], atol=1e-14)
    np.testing.assert_allclose(closest_point(circle(), [2.0, 0.0]), [1.0, 0.0], atol=1e-12)
    with pytest.raises(OutsideTube):
        closest_point(circle(), [0.0, 0.0])


def test_v_examples():
    M = circle()
    np.testing.assert_allclose(v_inverse_apply(M, [1.0, 0.0], [0, 1.0]), [0, 1.0], atol=1e-14)
    np.testing.assert_allclose(v_inverse_apply(M, [2.0, 0.0], [0, 1.0]), [0, 2.0], atol=1e-6)
    np.testing.assert_allclose(v_inverse_apply(M, [0.5, 0.0], [0, 1.0]), [0, 0.5], atol=1e-6)
    np.testing.assert_allclose(v_apply(M, [2.0, 0.0], [0, 2.0]), [0, 1.0], atol=1e-6)
    _, A = v_inverse_matrix(M, [2.0, 0.0])
    np.testing.assert_allclose(A, [[2.0]], atol=1e-6)


def test_tangent_frame_examples():
    fr = tangent_frame(flat(1, 2), [0.0, 0.0])
    np.testing.assert_allclose(np.abs(fr.tangent), [[1, 0]], atol=1e-14)
    np.testing.assert_allclose(np.abs(fr.normal), [[0, 1]], atol=1e-14)
    fr = tangent_frame(circle(), [1.0, 0.0])
    np.testing.assert_allclose(np.abs(fr.tangent), [[0, 1]], atol=1e-12)
    np.testing.assert_allclose(np.abs(fr.normal), [[1, 0]], atol=1e-12)
    fr = tangent_frame(sphere(), [0, 0, 1.0])
    np.testing.assert_allclose(np.abs(fr.normal), [[0, 0, 1]], atol=1e-12)
    np.testing.assert_allclose(fr.projector(), np.diag([1, 1, 0]), atol=1e-12)


def test_tangent_frame_is_deterministic():
    a = tangent_frame(torus(), torus().sample(1, seed=3)[0])
    b = tangent_frame(torus(), torus().sample(1, seed=3)[0])
    assert np.array_equal(a.tangent, b.tangent)


# ---- invariants ----------------------------------------------------------


@pytest.mark.parametrize("M", CATALOG, ids=IDS)
def test_projector_laws(M):
    for q in M.sample(32, seed=1):
        P = projector_matrix(M, q)
        assert np.abs(P @ P - P).max() <= 1e-10
        assert np.abs(P.T - P).max() <= 1e-10
        assert abs(np.trace(P) - M.dim) <= 1e-10
        fr = tangent_frame(M, q)
        assert np.abs(fr.basis @ fr.basis.T - np.eye(M.ambient_dim)).max() <= 1e-10
        assert np.abs(fr.projector() - P).max() <= 1e-10


@pytest.mark.parametrize("M", CATALOG, ids=IDS)
def test_h_symmetric_normal_and_adjoint(M):
    rng = np.random.default_rng(7)
    for q in M.sample(16, seed=2):
        P = projector_matrix(M, q)
        v, w, c = (_random_tangent(M, q, rng) for _ in range(3))
        n = _random_normal(M, q, rng)
        scale = np.linalg.norm(v) * np.linalg.norm(w)
        hvw = second_fundamental_form(M, q, v, w)
        hwv = second_fundamental_form(M, q, w, v)
        assert np.linalg.norm(hvw - hwv) <= 1e-6 * scale
        assert np.linalg.norm(P @ hvw) <= 1e-6 * scale
        lhs = c @ weingarten_adjoint(M, q, v, n)
        rhs = second_fundamental_form(M, q, v, c) @ n
        assert abs(lhs - rhs) <= 1e-6


@pytest.mark.parametrize("M", [circle(), sphere(), torus()], ids=["circle", "sphere", "torus"])
def test_analytic_h_matches_finite_differences(M):
    rng = np.random.default_rng(11)
    for q in M.sample(8, seed=4):
        v, w = _random_tangent(M, q, rng), _random_tangent(M, q, rng)
        a = second_fundamental_form(M, q, v, w, method="analytic")
        f = second_fundamental_form(M, q, v, w, method="fd")
        assert np.linalg.norm(a - f) <= 1e-5


@pytest.mark.parametrize("M", [circle(), sphere(), torus()], ids=["circle", "sphere", "torus"])
def test_v_matrix_self_adjoint_and_inverse(M):
    rng = np.random.default_rng(5)
    pts = M.sample(12, seed=6)
    for base in pts:
        n = _random_normal(M, base, rng)
        q = base + 0.4 * M.theta * n / np.linalg.norm(n)
        _, A = v_inverse_matrix(M, q)
        assert np.abs(A - A.T).max() <= 1e-8
        p = _random_tangent(M, base, rng)
        back = v_apply(M, q, v_inverse_apply(M, q, p))
        assert np.linalg.norm(back - p) <= 1e-10 * (1 + np.linalg.norm(p))


@pytest.mark.parametrize("M", [circle(), sphere()], ids=["circle", "sphere"])
def test_v_matches_differential_of_closest_point(M):
    rng = np.random.default_rng(9)
    h = 1e-5
    for base in M.sample(8, seed=8):
        n = _random_normal(M, base, rng)
        q = base + 0.3 * n / np.linalg.norm(n)
        p = _random_tangent(M, base, rng)
        fd = (closest_point(M, q + h * p) - closest_point(M, q - h * p)) / (2 * h)
        assert np.linalg.norm(v_apply(M, q, p) - fd) <= 1e-5 * (1 + np.linalg.norm(p))


@settings(max_examples=40, deadline=None)
@given(
    angle=st.floats(0, 2 * np.pi),
    radius=st.floats(0.2, 1.8),
)
def test_closest_point_orthogonal_and_idempotent(angle, radius):
    M = circle()
    q = radius * np.array([np.cos(angle), np.sin(angle)])
    qt = closest_point(M, q)
    assert np.linalg.norm(projector_matrix(M, qt) @ (q - qt)) <= 1e-10 * (1 + np.linalg.norm(q))
    assert np.linalg.norm(closest_point(M, qt) - qt) <= 1e-10
    np.testing.assert_allclose(qt, q / np.linalg.norm(q), atol=1e-10)


@pytest.mark.parametrize("M", [sphere(), torus()], ids=["sphere", "torus"])
def test_closest_point_in_tube_general(M):
    rng = np.random.default_rng(12)
    for base in M.sample(16, seed=13):
        n = _random_normal(M, base, rng)
        q = base + 0.5 * M.theta * n / np.linalg.norm(n)
        qt = closest_point(M, q)
        np.testing.assert_allclose(qt, base, atol=1e-9)


@pytest.mark.parametrize(
    "chart",
    [identity_chart(2, 1), rotation_chart(0.7, 1), polar_chart()],
    ids=["identity", "rotation", "polar"],
)
def test_chart_round_trip(chart):
    rng = np.random.default_rng(0)
    x = np.column_stack([rng.uniform(0.1, 6.0, 50), rng.uniform(-0.5, 0.5, 50)])
    back = chart.inverse(chart.phi(x))
    np.testing.assert_allclose(back, x, atol=1e-10)
    assert np.all(np.abs(np.linalg.det(chart.jacobian(x))) > 1e-6)
