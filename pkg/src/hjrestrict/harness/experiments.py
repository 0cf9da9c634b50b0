"""Experiment drivers: each turns a Scenario into a Report."""

from __future__ import annotations

import time
from contextlib import contextmanager

import numpy as np

from ..errors import ConfigurationError, HypothesisViolated
from ..geometry.operators import tangent_frame
from ..hamiltonian.field import pullback_hamiltonian
from ..hamiltonian.invariance import (
    SamplePlan,
    ball_sample,
    check_m_invariance,
    check_tm_invariance,
    normal_independence_defect,
    tangency_residual,
)
from ..hjsolver.convergence import ConvergenceProblem, convergence_study, hopf_lax_abs
from ..hjsolver.grid import GridFunction, multilinear_interpolate
from ..hjsolver.scheme import pde_residual, solve_cp, solve_cp_on_manifold
from ..transfer import (
    ExtensionParams,
    ManifoldFunction,
    extend_function,
    extend_hamiltonian,
    restrict_hamiltonian,
    restrict_solution,
)
from .report import STATUS_HYPOTHESIS, Report
from .scenario import Scenario

SATURATED = 1e-12


@contextmanager
def _timed(report: Report, key: str):
    t0 = time.perf_counter()
    yield
    report.timing[key] = report.timing.get(key, 0.0) + time.perf_counter() - t0


def _plan(s: Scenario) -> SamplePlan:
    inv = s.section("invariance")
    return SamplePlan(n=int(inv.get("samples", 1024)), p_max=float(inv.get("p_max", 5.0)), seed=s.seed)


def _ratio(fine: float, coarse: float) -> float:
    if coarse <= SATURATED and fine <= SATURATED:
        return 0.0
    return fine / coarse if coarse > 0 else float("inf")


def _new_report(s: Scenario) -> Report:
    return Report(scenario=s.doc, experiment=s.experiment, diagnostics={"refine": s.refine, "seed": s.seed})


def _require_invariance(s: Scenario, report: Report):
    M, H = s.require_manifold(), s.hamiltonian
    inv = check_m_invariance(H, M, _plan(s), tol=s.tolerance("invariance"))
    report.diagnostics["invariance"] = inv.to_dict()
    report.add("invariance_tangency", inv.max_tangency_residual, inv.tolerance)
    if not inv.tangency_ok:
        report.status_override = STATUS_HYPOTHESIS
        report.message = (
            f"{H.name} does not leave {M.name} x R^d invariant: tangency residual "
            f"{inv.max_tangency_residual:.3g} > {inv.tolerance:.1e}; the restriction theorem does not apply"
        )
        exc = HypothesisViolated(report.message)
        exc.report = report
        raise exc


def run_restrict_check(s: Scenario) -> Report:
    """Solve on the ambient grid, restrict to M, and compare with the chart-coordinate solve.

    Raises:
        HypothesisViolated: the Hamiltonian fails the invariance precheck; the
            exception carries the partial report as ``exc.report``.
    """
    report = _new_report(s)
    M, H, chart = s.require_manifold(), s.hamiltonian, s.chart
    if chart.manifold_dim != M.dim:
        raise ConfigurationError("restrict_check needs a chart whose tangential dimension equals dim M")
    with _timed(report, "invariance"):
        _require_invariance(s, report)
    u0, exact, T, params = s.initial(), s.exact(), s.T, s.scheme()
    Hbar = restrict_hamiltonian(H, M)
    u0bar = ManifoldFunction.static(M, u0)
    levels = []
    for k in (1, 2):
        ga, gc = s.grid("ambient", k), s.grid("chart", k)
        with _timed(report, f"ambient_solve_{k}"):
            ua = solve_cp(ga, H, u0, T, params)
        with _timed(report, f"chart_solve_{k}"):
            uc = solve_cp_on_manifold(M, chart, Hbar, u0bar.at(0.0), T, gc, params)
        pts = chart.manifold_point(gc.mesh)
        ub = restrict_solution(ua, M)(T, pts)
        row = {
            "ambient_shape": list(ga.shape),
            "chart_shape": list(gc.shape),
            "discrepancy": float(np.max(np.abs(ub - uc.values))),
            "ambient_solver": ua.info,
            "chart_solver": uc.info,
        }
        if exact is not None:
            ref = exact(T, pts)
            row["ambient_vs_exact"] = float(np.max(np.abs(ub - ref)))
            row["chart_vs_exact"] = float(np.max(np.abs(uc.values - ref)))
        levels.append(row)
        report.artifacts[f"ambient_{k}"] = ua
        report.artifacts[f"chart_{k}"] = uc
    report.diagnostics["levels"] = levels
    report.add("discrepancy", levels[0]["discrepancy"], s.tolerance("discrepancy"))
    report.add("discrepancy_refined", levels[1]["discrepancy"], s.tolerance("discrepancy_refined"))
    report.add("refinement_ratio", _ratio(levels[1]["discrepancy"], levels[0]["discrepancy"]), s.tolerance("refinement_ratio"))
    if exact is not None:
        for k, row in enumerate(levels, start=1):
            report.add(f"ambient_vs_exact_{k}", row["ambient_vs_exact"], s.tolerance("exact"))
            report.add(f"chart_vs_exact_{k}", row["chart_vs_exact"], s.tolerance("exact"))
    return report


def tube_samples(M, n: int, max_distance: float, seed: int = 0) -> np.ndarray:
    """Points q + n with q on M and n normal, |n| <= max_distance (strictly inside the tube)."""
    if not max_distance < M.theta:
        raise ConfigurationError(f"max_distance {max_distance} must be below theta {M.theta}")
    base = M.sample(n, seed=seed)
    rng = np.random.default_rng(seed)
    out = np.empty_like(base)
    for i, q in enumerate(base):
        normals = tangent_frame(M, q).normal
        c = rng.normal(size=len(normals))
        c /= max(np.linalg.norm(c), 1e-300)
        out[i] = q + rng.uniform(-max_distance, max_distance) * (c @ normals)
    return out


def run_extend_check(s: Scenario) -> Report:
    """Extend an exact restricted solution into the tube and measure its PDE residual."""
    report = _new_report(s)
    M, H = s.require_manifold(), s.hamiltonian
    exact = s.exact()
    if exact is None:
        raise ConfigurationError("extend_check needs 'exact': a solution of the restricted problem")
    ext = s.section("extension")
    sweep = ext.get("a", [0.0, 1.0, -0.5])
    sweep = [float(a) for a in (sweep if isinstance(sweep, list) else [sweep])]
    n, n_t = int(ext.get("samples", 200)), int(ext.get("times", 20))
    r = float(ext.get("max_distance", 0.5 * M.theta))
    step = float(ext.get("step", 1e-5))
    T = s.T

    Hext = extend_hamiltonian(restrict_hamiltonian(H, M), M)
    ubar = ManifoldFunction(exact, M)
    pts = tube_samples(M, n, r, seed=s.seed)
    times = np.linspace(0.0, T, n_t)
    report.diagnostics.update(samples=n, times=n_t, max_distance=r, step=step, sweep=sweep)

    with _timed(report, "residuals"):
        for a in sweep:
            u = extend_function(ubar, M, ExtensionParams(a))
            report.add(f"residual[a={a:g}]", pde_residual(u, Hext, pts, times, step), s.tolerance("residual"))
            on_m = M.sample(64, seed=s.seed + 2)
            back = restrict_solution(u, M)(T, on_m)
            report.diagnostics[f"round_trip[a={a:g}]"] = float(np.max(np.abs(back - ubar(T, on_m))))
    with _timed(report, "independence"):
        plan = _plan(s)
        q = M.sample(plan.n, seed=plan.seed)
        p = ball_sample(M.ambient_dim, plan.n, plan.p_max, seed=plan.seed + 1)
        report.add("independence", float(np.max(normal_independence_defect(Hext, M, q, p))), s.tolerance("independence"))

    if ext.get("mode", "closure") == "grid":
        grid = s.grid("ambient")
        u = extend_function(ubar, M, ExtensionParams(sweep[0]))
        with _timed(report, "grid_sampling"):
            gf = u.to_grid(grid, T)
            inside = pts[np.all((pts >= [a.lo for a in grid.axes]) & (pts <= [a.hi for a in grid.axes]), axis=-1)]
            diff = np.abs(multilinear_interpolate(grid, gf.values, inside) - u(T, inside))
        report.artifacts["extension_grid"] = gf
        report.add("grid_vs_closure", float(np.max(diff)), s.tolerance("grid_vs_closure"))
    return report


def run_invariance_report(s: Scenario) -> Report:
    """Sampled invariance criteria, plus an optional documented probe point."""
    report = _new_report(s)
    M, H = s.require_manifold(), s.hamiltonian
    inv_cfg = s.section("invariance")
    tol = s.tolerance("invariance")
    with _timed(report, "sampling"):
        if inv_cfg.get("criterion", "m") == "tm":
            rep = check_tm_invariance(H, M, _plan(s), tol=s.tolerance("tm"))
            report.add("tm_residual", rep.max_tm_residual, rep.tolerance)
        else:
            rep = check_m_invariance(H, M, _plan(s), tol=tol)
    report.diagnostics["invariance"] = rep.to_dict()
    report.add("tangency_residual", rep.max_tangency_residual, tol)
    report.add("normal_independence_residual", rep.max_normal_independence_residual, tol)
    if "probe" in inv_cfg:
        q = np.asarray(inv_cfg["probe"]["q"], dtype=float)
        p = np.asarray(inv_cfg["probe"]["p"], dtype=float)
        if q.shape != (M.ambient_dim,) or p.shape != (M.ambient_dim,):
            raise ConfigurationError("probe q and p must have the ambient dimension")
        M.require_on_manifold(q)
        report.add("probe_tangency_residual", float(tangency_residual(H, M, q, p)), tol)
        report.add("probe_normal_independence_residual", float(normal_independence_defect(H, M, q, p)), tol)
    return report


def _push_forward(gf: GridFunction, chart, points, margin):
    """Interpolate a chart-grid solution at ambient points; mask points outside the chart grid."""
    x = chart.inverse(points)
    mask = np.ones(points.shape[:-1], dtype=bool)
    for i, a in enumerate(gf.grid.axes):
        if not a.periodic:
            mask &= (x[..., i] >= a.lo + margin[i] - 1e-12) & (x[..., i] <= a.hi - margin[i] + 1e-12)
    vals = np.full(points.shape[:-1], np.nan)
    vals[mask] = multilinear_interpolate(gf.grid, gf.values, x[mask])
    return vals, mask


def run_chart_equivalence(s: Scenario) -> Report:
    """Solve directly and through a chart pullback, then compare on common ambient nodes."""
    report = _new_report(s)
    H, chart, u0, T, params = s.hamiltonian, s.chart, s.initial(), s.T, s.scheme()
    exact = s.exact()
    Hc = pullback_hamiltonian(H, chart)
    identity = chart.name == "identity"
    levels = []
    for k in (1, 2):
        ga, gc = s.grid("ambient", k), s.grid("chart", k)
        if gc.ndim != chart.dim:
            raise ConfigurationError("chart grid must have one axis per chart coordinate")
        with _timed(report, f"direct_solve_{k}"):
            ud = solve_cp(ga, H, u0, T, params)
        with _timed(report, f"chart_solve_{k}"):
            uc = solve_cp(gc, Hc, u0(chart.phi(gc.mesh)), T, params)
        if identity:
            margin_c = np.zeros(gc.ndim)
            margin_a = np.zeros(ga.ndim)
        else:
            margin_c = T * np.asarray(uc.info["alpha"])
            margin_a = T * np.asarray(ud.info["alpha"])
        pushed, mask = _push_forward(uc, chart, ga.mesh, margin_c)
        mask &= ga.interior_mask(margin_a)
        if not np.any(mask):
            raise ConfigurationError("no ambient node lies inside both grids after the boundary margins")
        diff = np.abs(ud.values - pushed)[mask]
        row = {
            "ambient_shape": list(ga.shape),
            "chart_shape": list(gc.shape),
            "compared_nodes": int(mask.sum()),
            "discrepancy": float(np.max(diff)),
            "dx": float(max(np.max(ga.spacing), np.max(gc.spacing))),
            "direct_solver": ud.info,
            "chart_solver": uc.info,
        }
        if exact is not None:
            ref = exact(T, ga.mesh)[mask]
            row["direct_vs_exact"] = float(np.max(np.abs(ud.values[mask] - ref)))
            row["chart_vs_exact"] = float(np.max(np.abs(pushed[mask] - ref)))
        levels.append(row)
        report.artifacts[f"direct_{k}"] = ud
        report.artifacts[f"chart_{k}"] = uc
        if k == 1:
            _manifold_slice(s, report, chart, gc, uc, T, params)
    report.diagnostics["levels"] = levels
    if identity:
        report.add("identity_max_difference", levels[0]["discrepancy"], s.tolerance("identity"))
    else:
        for k, row in enumerate(levels, start=1):
            report.add(f"discrepancy_per_dx_{k}", row["discrepancy"] / row["dx"], s.tolerance("discrepancy_per_dx"))
        report.add("refinement_ratio", _ratio(levels[1]["discrepancy"], levels[0]["discrepancy"]), s.tolerance("refinement_ratio"))
    return report


def _manifold_slice(s: Scenario, report: Report, chart, gc, uc, T, params):
    """If M is given, compare the chart solve on the slice {transverse = 0} with the restricted solve."""
    M = s.manifold
    if M is None or chart.manifold_dim != M.dim or M.dim == chart.dim:
        return
    index = []
    for a in gc.axes[M.dim :]:
        hit = np.flatnonzero(np.abs(a.nodes) < 1e-12)
        if len(hit) == 0:
            report.diagnostics["manifold_slice"] = "skipped: the chart grid has no node on the manifold"
            return
        index.append(int(hit[0]))
    sub = type(gc)(gc.axes[: M.dim])
    um = solve_cp_on_manifold(M, chart, restrict_hamiltonian(s.hamiltonian, M), s.initial(), T, sub, params)
    sl = uc.values[(Ellipsis, *index)]
    report.add("manifold_slice", float(np.max(np.abs(sl - um.values))), s.tolerance("manifold_slice"))


def run_convergence(s: Scenario) -> Report:
    """Refinement study against the closed-form 'exact' or the 1D Hopf-Lax reference."""
    report = _new_report(s)
    H, u0, T, params = s.hamiltonian, s.initial(), s.T, s.scheme()
    reference = s.doc.get("reference", "exact")
    if reference == "hopf_lax":
        if s.dimension != 1:
            raise ConfigurationError("the Hopf-Lax reference is implemented for d = 1 and H = |p|")
        exact = lambda t, x: hopf_lax_abs(u0, t, x)  # noqa: E731
    else:
        exact = s.exact()
        if exact is None:
            raise ConfigurationError("convergence needs 'exact' or reference = 'hopf_lax'")
    n_levels = int(s.doc.get("refinements", 3)) + 1
    grids = [s.grid("ambient", 2**k) for k in range(n_levels)]
    with _timed(report, "study"):
        rows = convergence_study(ConvergenceProblem(H, u0, exact, T, params=params, name=s.name), grids)
    report.diagnostics["table"] = [r.to_dict() for r in rows]
    orders = [r.order for r in rows if r.order is not None]
    if all(r.saturated for r in rows[1:]) and len(rows) > 1:
        report.diagnostics["order"] = "saturated"
        report.add("max_error", max(r.error for r in rows), 1e-10)
    elif orders:
        report.add("min_order", min(orders), s.tolerance("order"), ">=")
    else:
        raise ConfigurationError("convergence needs at least one refinement")
    return report


RUNNERS = {
    "restrict_check": run_restrict_check,
    "extend_check": run_extend_check,
    "invariance_report": run_invariance_report,
    "chart_equivalence": run_chart_equivalence,
    "convergence": run_convergence,
}


def run_scenario(s: Scenario) -> Report:
    """Dispatch on the experiment kind; a refused hypothesis still yields a report."""
    t0 = time.perf_counter()
    try:
        report = RUNNERS[s.experiment](s)
    except HypothesisViolated as exc:
        report = getattr(exc, "report", None)
        if report is None:
            report = _new_report(s)
            report.status_override = STATUS_HYPOTHESIS
            report.message = str(exc)
    report.timing["total"] = time.perf_counter() - t0
    return report
