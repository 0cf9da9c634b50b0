import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjrestrict.errors import NonFiniteGradient
from hjrestrict.geometry import circle, flat, identity_chart, polar_chart, projector_matrix, rotation_chart
from hjrestrict.hamiltonian import (
    FlowState,
    HamiltonianField,
    Region,
    SamplePlan,
    check_growth_assumptions,
    check_m_invariance,
    check_tm_invariance,
    constant,
    free,
    hamiltonian_vector_field,
    integrate_flow,
    normal_independence_defect,
    pullback_hamiltonian,
    quartic,
    rotation,
    tangency_residual,
    tangent_kinetic,
    transport,
)
from hjrestrict.hjsolver import pde_residual

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def test_vector_field_examples():
    dq, dp = hamiltonian_vector_field(free(), FlowState([1.0, 2.0], [3.0, 4.0]))
    np.testing.assert_allclose(dq, [3, 4])
    np.testing.assert_allclose(dp, [0, 0])
    dq, dp = hamiltonian_vector_field(rotation(), FlowState([1.0, 0.0], [0.0, 1.0]))
    np.testing.assert_allclose(dq, [0, 1], atol=1e-14)
    np.testing.assert_allclose(dp, [-1, 0], atol=1e-14)
    dq, dp = hamiltonian_vector_field(constant(3.0), FlowState([1.0, 0.0], [0.0, 1.0]))
    np.testing.assert_allclose(np.r_[dq, dp], 0.0, atol=1e-12)


def test_vector_field_rejects_nan():
    H = HamiltonianField(func=lambda q, p: np.sqrt(-1.0 - p[..., 0] ** 2), dim=2)
    with np.errstate(invalid="ignore"), pytest.raises(NonFiniteGradient):
        hamiltonian_vector_field(H, FlowState([0.0, 0.0], [0.0, 0.0]))


@pytest.mark.parametrize("H", [free(), rotation(), transport(1.0, -2.0), quartic()], ids=lambda h: h.name)
def test_analytic_gradients_match_finite_differences(H):
    rng = np.random.default_rng(3)
    q, p = rng.normal(size=(64, 2)), rng.normal(size=(64, 2))
    for a, f in ((H.grad_q(q, p), H.grad_q_fd(q, p)), (H.grad_p(q, p), H.grad_p_fd(q, p))):
        assert np.abs(a - f).max() <= 1e-5 * (1 + np.abs(a).max())


def test_rotation_flow_quarter_turn():
    traj = integrate_flow(rotation(), FlowState([1.0, 0.0], [0.0, 1.0]), np.pi / 2, 1e-3)
    assert traj[-1].t == pytest.approx(np.pi / 2)
    np.testing.assert_allclose(traj[-1].q, [0.0, 1.0], atol=1e-6)


def test_free_flow_is_exact():
    traj = integrate_flow(free(), FlowState([1.0, -1.0], [0.5, 2.0]), 1.3, 0.1)
    np.testing.assert_allclose(traj[-1].q, [1.0 + 1.3 * 0.5, -1.0 + 1.3 * 2.0], atol=1e-13)


def test_rk4_order_on_rotation():
    exact = np.array([np.cos(1.0), np.sin(1.0)])

    def err(dt):
        return np.linalg.norm(integrate_flow(rotation(), FlowState([1.0, 0.0], [0.0, 0.0]), 1.0, dt)[-1].q - exact)

    ratio = err(0.1) / err(0.05)
    assert np.log2(ratio) >= 3.5
    assert ratio == pytest.approx(16, rel=0.15)


def test_integrate_flow_rejects_bad_arguments():
    with pytest.raises(ValueError):
        integrate_flow(free(), FlowState([0.0, 0.0], [1.0, 0.0]), 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_flow(free(), FlowState([0.0, 0.0], [1.0, 0.0], t=2.0), 1.0, 0.1)


@pytest.mark.parametrize("H", [free(), rotation(), transport(0.3, 0.1)], ids=lambda h: h.name)
def test_energy_conservation(H):
    traj = integrate_flow(H, FlowState([0.6, 0.8], [0.4, -1.2]), 1.0, 1e-3)
    e = np.array([float(H(s.q, s.p)) for s in traj])
    assert np.abs(e - e[0]).max() <= 1e-6


def test_invariant_flow_stays_on_circle():
    M = circle()
    assert tangency_residual(rotation(), M, [0.6, 0.8], [1.0, 2.0]) <= 1e-9
    traj = integrate_flow(rotation(), FlowState([0.6, 0.8], [1.0, 2.0]), 1.0, 1e-3)
    drift = max(abs(np.linalg.norm(s.q) - 1.0) for s in traj)
    assert drift <= 1e-6


def test_m_invariance_examples():
    M = circle()
    rep = check_m_invariance(rotation(), M, SamplePlan(n=1024))
    assert rep.max_tangency_residual <= 1e-9
    assert rep.max_normal_independence_residual <= 1e-9
    assert tangency_residual(free(), M, [0.0, 1.0], [0.0, 1.0]) == pytest.approx(1.0)
    H = HamiltonianField(func=lambda q, p: np.sin(q[..., 0]) * p[..., 0] ** 2, dim=2)
    rep = check_m_invariance(H, flat(1, 2), SamplePlan(n=256))
    assert rep.tangency_ok and rep.normal_independence_ok


@pytest.mark.parametrize(
    "H, invariant",
    [(rotation(), True), (tangent_kinetic(circle()), True), (free(), False), (transport(1.0, 0.0), False)],
    ids=["rotation", "tangent_kinetic", "free", "transport"],
)
def test_criteria_agree(H, invariant):
    rep = check_m_invariance(H, circle(), SamplePlan(n=256))
    assert rep.tangency_ok == rep.normal_independence_ok == invariant


def test_tm_invariance_examples():
    rep = check_tm_invariance(free(), flat(1, 2), SamplePlan(n=128))
    assert rep.max_tm_residual <= 1e-9
    rep = check_tm_invariance(rotation(), circle(), SamplePlan(n=256))
    assert rep.max_tm_residual <= 1e-6 and rep.tm_ok
    rep = check_tm_invariance(transport(1.0, 0.0), circle(), SamplePlan(n=64))
    assert rep.max_tangency_residual > 0.1 and not rep.tm_ok


def test_growth_examples():
    box = np.array([[-2.0, 2.0], [-2.0, 2.0]])
    assert check_growth_assumptions(free(), Region(box, 5.0, n=256), C=1.0).satisfied
    disk = np.array([[-2.0, 2.0], [-2.0, 2.0]]) / np.sqrt(2)
    assert check_growth_assumptions(rotation(), Region(disk, 5.0, n=256), C=2.0).satisfied
    rep = check_growth_assumptions(quartic(), Region(box, 10.0, n=256), C=1.0)
    assert not rep.satisfied and rep.grad_p_ratio > 10


def test_normal_independence_defect_examples():
    M = circle()
    assert normal_independence_defect(free(), M, [0.0, 1.0], [0.0, 1.0]) == pytest.approx(0.5)
    assert normal_independence_defect(rotation(), M, [0.6, 0.8], [3.0, -1.0]) <= 1e-10
    q = np.array([0.6, 0.8])
    p = projector_matrix(M, q) @ np.array([2.0, 1.0])
    assert normal_independence_defect(free(), M, q, p) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(
    x=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    p=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    angle=st.floats(-np.pi, np.pi),
)
def test_pullback_by_rotation(x, p, angle):
    chart = rotation_chart(angle, 1)
    R = chart.jacobian(np.zeros(2))
    H = HamiltonianField(func=lambda q, p: q[..., 0] * p[..., 1] ** 2 + np.cos(q[..., 1]) * p[..., 0], dim=2)
    Hh = pullback_hamiltonian(H, chart)
    assert float(Hh(x, p)) == pytest.approx(float(H(R @ np.array(x), R @ np.array(p))), abs=1e-12)


def test_pullback_identity_is_pointwise_equal():
    H = free()
    Hh = pullback_hamiltonian(H, identity_chart(2))
    rng = np.random.default_rng(1)
    q, p = rng.normal(size=(20, 2)), rng.normal(size=(20, 2))
    assert np.array_equal(Hh(q, p), H(q, p))


def test_pullback_polar_rotation_is_angular_transport():
    Hh = pullback_hamiltonian(rotation(), polar_chart())
    x = np.array([[0.3, 0.0], [2.0, 0.2], [5.0, -0.4]])
    p = np.array([[1.5, 0.7], [-0.2, 3.0], [0.8, -1.0]])
    np.testing.assert_allclose(Hh(x, p), p[:, 0], atol=1e-12)


def test_pullback_preserves_classical_solutions():
    # u0 = q_0 transported by the rotation field
    def u(t, q):
        return np.cos(t) * q[..., 0] + np.sin(t) * q[..., 1]

    H = rotation()
    assert pde_residual(u, H, np.random.default_rng(0).uniform(-1, 1, (50, 2)), np.linspace(0.1, 0.9, 5)) <= 1e-6
    chart = polar_chart()

    def uh(t, x):
        return u(t, chart.phi(x))

    xs = np.column_stack([np.linspace(0.2, 6.0, 40), np.linspace(-0.5, 0.5, 40)])
    assert pde_residual(uh, pullback_hamiltonian(H, chart), xs, np.linspace(0.1, 0.9, 5)) <= 1e-6
