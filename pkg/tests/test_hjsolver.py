import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjrestrict.errors import CFLViolation, NonFinite, OutOfGrid
from hjrestrict.geometry import circle, flat, identity_chart, polar_chart
from hjrestrict.hamiltonian import HamiltonianField, abs_, constant, free, rotation, transport
from hjrestrict.hjsolver import (
    Axis,
    ConvergenceProblem,
    Grid,
    GridFunction,
    SchemeParams,
    central_gradient,
    convergence_study,
    estimate_dissipation,
    from_bytes,
    grid_from_spec,
    hopf_lax_abs,
    lax_friedrichs_step,
    linf_error,
    max_stable_dt,
    pde_residual,
    read_binary,
    solve_cp,
    solve_cp_on_manifold,
    to_bytes,
    write_binary,
    write_csv,
)
from hjrestrict.transfer import restrict_hamiltonian


def _rotated_q0(t, q):
    return np.cos(t) * q[..., 0] + np.sin(t) * q[..., 1]


# ---- grids ---------------------------------------------------------------


def test_axis_invariants():
    with pytest.raises(ValueError):
        Axis(0.0, 1.0, 2)
    with pytest.raises(ValueError):
        Axis(1.0, 1.0, 5)
    with pytest.raises(ValueError):
        Axis(0.0, 1.0, 5, "reflect")


def test_axis_spacing_and_refinement():
    a = Axis(-2.0, 2.0, 161)
    assert a.spacing == pytest.approx(0.025)
    assert a.refined(2).n == 321
    p = Axis(0.0, 2 * np.pi, 512, "periodic")
    assert p.spacing == pytest.approx(2 * np.pi / 512)
    assert p.nodes[-1] < 2 * np.pi
    assert p.refined(2).n == 1024


def test_grid_from_spec_and_mask():
    g = grid_from_spec([{"min": -1, "max": 1, "n": 5}, {"min": 0, "max": 6.0, "n": 6, "boundary": "periodic"}])
    assert g.shape == (5, 6)
    mask = g.interior_mask(0.5)
    assert mask.sum() == 3 * 6


def test_grid_function_rejects_non_finite():
    g = Grid.uniform(0, 1, 4, 1)
    with pytest.raises(NonFinite):
        GridFunction(g, [0.0, np.nan, 1.0, 2.0])


def test_interpolation_is_exact_at_nodes_and_for_bilinear_data():
    g = Grid.uniform(-1, 1, 9, 2)
    f = lambda q: 1 + 2 * q[..., 0] - q[..., 1] + 3 * q[..., 0] * q[..., 1]  # noqa: E731
    gf = GridFunction.sample(g, f)
    assert np.array_equal(gf.interpolate(g.mesh), gf.values)
    pts = np.random.default_rng(0).uniform(-1, 1, (100, 2))
    np.testing.assert_allclose(gf.interpolate(pts), f(pts), atol=1e-13)
    with pytest.raises(OutOfGrid):
        gf.interpolate([[1.5, 0.0]])


def test_periodic_interpolation_wraps():
    g = Grid((Axis(0.0, 2 * np.pi, 64, "periodic"),))
    gf = GridFunction.sample(g, lambda x: np.sin(x[..., 0]))
    x = np.array([[2 * np.pi - 0.01], [2 * np.pi + 0.3], [-0.2]])
    np.testing.assert_allclose(gf.interpolate(x), np.sin(x[:, 0]), atol=2e-3)


# ---- scheme ---------------------------------------------------------------


def test_linear_data_unchanged_under_zero_hamiltonian():
    g = Grid.uniform(-1, 1, 21, 2)
    gf = GridFunction.sample(g, lambda q: 0.5 + q[..., 0] - 2 * q[..., 1])
    out = lax_friedrichs_step(gf, constant(0.0), SchemeParams(alpha=(1.0, 1.0)))
    interior = g.interior_mask(0.1)
    np.testing.assert_allclose(out.values[interior], gf.values[interior], atol=1e-14)
    # with linear ghost extrapolation even the boundary rows are preserved
    gl = Grid.uniform(-1, 1, 21, 2, "linear")
    gf = GridFunction.sample(gl, lambda q: 0.5 + q[..., 0] - 2 * q[..., 1])
    out = lax_friedrichs_step(gf, constant(0.0), SchemeParams(alpha=(1.0, 1.0)))
    np.testing.assert_allclose(out.values, gf.values, atol=1e-14)


def test_zero_hamiltonian_smooths_kinks():
    g = Grid.uniform(-1, 1, 21, 1)
    gf = GridFunction.sample(g, lambda q: np.abs(q[..., 0]))
    out = lax_friedrichs_step(gf, constant(0.0, d=1), SchemeParams(alpha=(1.0,)))
    assert out.values[10] > gf.values[10]


def test_cfl_violation():
    g = Grid.uniform(-1, 1, 21, 1)
    gf = GridFunction.sample(g, lambda q: q[..., 0])
    bound = max_stable_dt(g, [1.0], 0.4)
    assert bound == pytest.approx(0.4 * 0.1)
    with pytest.raises(CFLViolation):
        lax_friedrichs_step(gf, transport(1.0), SchemeParams(alpha=(1.0,)), dt=2 * bound)
    with pytest.raises(CFLViolation):
        solve_cp(g, transport(1.0), lambda q: q[..., 0], 0.5, SchemeParams(alpha=(1.0,), dt=1.0))


def test_dissipation_estimate_covers_speeds():
    g = Grid.uniform(-2, 2, 41, 2)
    u = np.asarray(g.mesh[..., 0])
    alpha = estimate_dissipation(g, rotation(), u)
    assert np.all(alpha >= 2.0)
    alpha = estimate_dissipation(Grid.uniform(-1, 1, 21, 1), transport(0.7), np.zeros(21))
    assert alpha[0] == pytest.approx(0.7)


def test_central_gradient_of_linear_data():
    g = Grid.uniform(-1, 1, 11, 2, "linear")
    gf = GridFunction.sample(g, lambda q: 3 * q[..., 0] - q[..., 1])
    grad = central_gradient(g, gf.values)
    np.testing.assert_allclose(grad[..., 0], 3.0, atol=1e-12)
    np.testing.assert_allclose(grad[..., 1], -1.0, atol=1e-12)


def test_solve_cp_at_time_zero_is_exact():
    g = Grid.uniform(-2, 2, 33, 2)
    f = lambda q: np.sin(q[..., 0]) * q[..., 1]  # noqa: E731
    out = solve_cp(g, rotation(), f, 0.0)
    assert np.array_equal(out.values, GridFunction.sample(g, f).values)
    assert out.info["steps"] == 0


def test_solve_cp_lands_on_final_time():
    g = Grid.uniform(-1, 1, 41, 1)
    out = solve_cp(g, transport(1.0), lambda q: np.sin(q[..., 0]), 0.3333)
    assert out.t == 0.3333
    assert out.info["steps"] * out.info["dt"] >= 0.3333


def test_rotation_error_is_first_order():
    errs = []
    for n in (81, 161):
        g = Grid.uniform(-2, 2, n, 2)
        out = solve_cp(g, rotation(), lambda q: q[..., 0], 0.5)
        errs.append(linf_error(out, _rotated_q0, margin=np.asarray(out.info["alpha"]) * 0.5))
        assert errs[-1] <= 2.0 * g.spacing.max()
    assert errs[1] < errs[0]


def test_free_affine_is_exact_with_linear_boundaries():
    b = np.array([0.5, -1.0])
    g = Grid.uniform(-1, 1, 21, 2, "linear")
    out = solve_cp(g, free(), lambda q: q @ b, 0.4)
    exact = g.mesh @ b - 0.4 * b @ b / 2
    assert np.abs(out.values - exact).max() <= 1e-12


def test_transport_convergence_order():
    g0 = Grid((Axis(0.0, 2 * np.pi, 64, "periodic"),))
    problem = ConvergenceProblem(
        transport(1.0),
        lambda q: np.sin(q[..., 0]),
        lambda t, q: np.sin(q[..., 0] - t),
        T=0.5,
    )
    rows = convergence_study(problem, [g0.refined(k) for k in (1, 2, 4)])
    assert all(0.8 <= r.order <= 1.2 for r in rows[1:])


def test_affine_convergence_saturates():
    g0 = Grid.uniform(-1, 1, 11, 1, "linear")
    problem = ConvergenceProblem(free(1), lambda q: 2 * q[..., 0], lambda t, q: 2 * q[..., 0] - 2 * t, T=0.25)
    rows = convergence_study(problem, [g0.refined(k) for k in (1, 2)])
    assert rows[-1].saturated and rows[-1].order is None


def test_hopf_lax_oracle():
    q = np.linspace(-1, 1, 11)[:, None]
    # the brute-force minimiser is exact up to its sampling spacing 2t / (samples - 1)
    got = hopf_lax_abs(lambda y: np.abs(y[..., 0]), 0.3, q, samples=4001)
    np.testing.assert_allclose(got, np.maximum(np.abs(q[:, 0]) - 0.3, 0), atol=0.6 / 4000)
    np.testing.assert_allclose(hopf_lax_abs(lambda y: y[..., 0] ** 2, 0.0, q), q[:, 0] ** 2)


def test_monotonicity_on_random_pairs():
    rng = np.random.default_rng(2024)
    cases = [
        (Grid.uniform(-2, 2, 17, 2), rotation(), SchemeParams(alpha=(2.0, 2.0))),
        (Grid.uniform(-1, 1, 33, 1), abs_(1), SchemeParams(alpha=(1.0,))),
        (Grid.uniform(-1, 1, 9, 2), free(), SchemeParams(alpha=(3.0, 3.0))),
    ]
    for k in range(100):
        g, H, params = cases[k % len(cases)]
        u = rng.uniform(-1, 1, g.shape) * 0.2
        v = u + rng.uniform(0, 0.1, g.shape)
        if H.name.startswith("free"):
            # keep central gradients inside the hull where alpha = 3 bounds |p|
            u = u * 0.1
            v = u + rng.uniform(0, 0.01, g.shape)
        du = lax_friedrichs_step(GridFunction(g, u), H, params)
        dv = lax_friedrichs_step(GridFunction(g, v), H, params)
        assert np.all(dv.values >= du.values - 1e-14), k


def test_one_step_truncation_error_is_second_order():
    def local_error(n):
        g = Grid((Axis(0.0, 2 * np.pi, n, "periodic"),))
        gf = GridFunction.sample(g, lambda x: np.sin(x[..., 0]))
        out = lax_friedrichs_step(gf, transport(1.0), SchemeParams(alpha=(1.0,)))
        return np.abs(out.values - np.sin(g.mesh[..., 0] - out.t)).max()

    assert np.log2(local_error(64) / local_error(128)) >= 1.7


def test_max_norm_stability():
    g = Grid.uniform(-2, 2, 41, 2)
    u0 = lambda q: np.sin(2 * q[..., 0]) * np.cos(q[..., 1])  # noqa: E731
    for H in (rotation(), abs_(), free()):
        out = solve_cp(g, H, u0, 0.5)
        bound = 1.0 + 0.5 * float(np.abs(H(g.mesh, np.zeros_like(g.mesh))).max())
        assert np.abs(out.values).max() <= bound + 1e-12


# ---- manifold solves --------------------------------------------------------


def test_polar_chart_transport():
    M = circle()
    g = Grid((Axis(0.0, 2 * np.pi, 256, "periodic"),))
    out = solve_cp_on_manifold(M, polar_chart(), restrict_hamiltonian(rotation(), M), lambda q: q[..., 0], 0.5, g)
    theta = g.mesh[..., 0]
    assert np.abs(out.values - np.cos(theta - 0.5)).max() <= 2.0 * g.spacing.max()


def test_flat_manifold_solve_matches_plain_solve():
    M = flat(1, 2)
    g = Grid.uniform(-1, 1, 41, 1)
    Hbar = restrict_hamiltonian(transport(0.6, 0.0), M)
    a = solve_cp_on_manifold(M, identity_chart(2, 1), Hbar, lambda q: np.sin(3 * q[..., 0]), 0.3, g)
    b = solve_cp(g, transport(0.6), lambda q: np.sin(3 * q[..., 0]), 0.3)
    np.testing.assert_allclose(a.values, b.values, atol=1e-13)


def test_zero_hamiltonian_on_manifold_keeps_data():
    M = circle()
    g = Grid((Axis(0.0, 2 * np.pi, 64, "periodic"),))
    H0 = restrict_hamiltonian(constant(0.0), M)
    out = solve_cp_on_manifold(M, polar_chart(), H0, lambda q: q[..., 1], 0.5, g, SchemeParams(alpha=(0.0,), dt=0.1))
    np.testing.assert_allclose(out.values, np.sin(g.mesh[..., 0]), atol=1e-14)


# ---- residuals --------------------------------------------------------------


def test_pde_residual_examples():
    pts = np.random.default_rng(1).uniform(-1, 1, (50, 2))
    b = np.array([1.0, 2.0])
    affine = lambda t, q: q @ b - t * (b @ b) / 2  # noqa: E731
    assert pde_residual(affine, free(), pts, [0.1, 0.5]) <= 1e-9
    wrong = lambda t, q: np.linalg.norm(q, axis=-1)  # noqa: E731
    assert pde_residual(wrong, abs_(), pts, [0.1, 0.5]) >= 0.5


# ---- io ---------------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(
    n=st.integers(3, 12),
    m=st.integers(3, 7),
    t=st.floats(0, 10),
    periodic=st.booleans(),
)
def test_binary_round_trip(n, m, t, periodic):
    g = Grid((Axis(-1.0, 2.5, n), Axis(0.0, 1.0, m, "periodic" if periodic else "linear")))
    values = np.random.default_rng(n * m).normal(size=g.shape)
    back = from_bytes(to_bytes(GridFunction(g, values, t)))
    assert back.t == t
    assert back.grid.describe() == g.describe()
    assert np.array_equal(back.values, values)


def test_binary_rejects_corrupt_data():
    data = to_bytes(GridFunction(Grid.uniform(0, 1, 4, 1), np.arange(4.0)))
    with pytest.raises(ValueError):
        from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        from_bytes(data[:-8])


def test_files_round_trip(tmp_path):
    g = Grid.uniform(-1, 1, 4, 2)
    gf = GridFunction.sample(g, lambda q: q[..., 0] + 10 * q[..., 1], t=0.25)
    write_binary(gf, tmp_path / "u.hjgf")
    back = read_binary(tmp_path / "u.hjgf")
    assert np.array_equal(back.values, gf.values)
    write_csv(gf, tmp_path / "u.csv")
    rows = np.loadtxt(tmp_path / "u.csv", delimiter=",", skiprows=1)
    header = (tmp_path / "u.csv").read_text().splitlines()[0]
    assert header == "x0,x1,value"
    np.testing.assert_array_equal(rows[:, 2], gf.flat)


def test_custom_hamiltonian_with_finite_difference_gradients():
    H = HamiltonianField(func=lambda q, p: 0.5 * p[..., 0] ** 2, dim=1)
    g = Grid.uniform(-1, 1, 41, 1, "linear")
    out = solve_cp(g, H, lambda q: q[..., 0], 0.2)
    np.testing.assert_allclose(out.values, g.mesh[..., 0] - 0.1, atol=1e-9)
