import numpy as np
import pytest

from dmhfem.analytic import AnalyticSolution, Branch, nonactive_solution
from dmhfem.assembly import FaceSolution
from dmhfem.condensation import element_system
from dmhfem.postprocess import (
    ErrorReport,
    barycentric,
    central_column,
    compute_errors,
    cr_interpolant,
    flux_jumps,
    line_profile,
    observed_orders,
    profile_metrics,
    recover_fields,
    write_errors_csv,
    write_profile_csv,
)
from dmhfem.problem import Coefficients, Dirichlet, Neumann, ProblemSpec, SIDES

from conftest import run, unit_spec


def test_zero_data_gives_zero_fields(mesh2):
    c = Coefficients(mu=1.0, r=1.0, g=0.0, v=(0.0, 0.0, 1.0))
    spec = ProblemSpec(c, c, bcs={s: Dirichlet(0.0) for s in SIDES})
    _, _, sol, f = run(mesh2, spec)
    assert np.abs(f.u).max() < 1e-14 and np.abs(f.flux).max() < 1e-14


def test_barycentric_partition(mesh2, rng):
    e = rng.integers(0, mesh2.num_elements, 20)
    w = rng.dirichlet(np.ones(4), 20)
    pts = np.einsum("ni,nik->nk", w, mesh2.geometry.vertices[e])
    assert np.allclose(barycentric(mesh2.geometry.vertices[e], pts), w)


def test_cr_interpolant_reproduces_affine(mesh2, rng):
    a, b = rng.normal(size=3), rng.normal()
    f = lambda p: p @ a + b
    # face-barycenter values of an affine function, as seen by each element
    traces = f(mesh2.face_barycenters)[mesh2.element_faces]
    e = rng.integers(0, mesh2.num_elements, 30)
    w = rng.dirichlet(np.ones(4), 30)
    pts = np.einsum("ni,nik->nk", w, mesh2.geometry.vertices[e])
    assert np.allclose(cr_interpolant(traces, mesh2, pts, e), f(pts), atol=1e-13)


def test_cr_interpolant_barycenter_is_trace_mean(mesh2, rng):
    traces = rng.normal(size=(mesh2.num_elements, 4))
    e = np.arange(mesh2.num_elements)
    val = cr_interpolant(traces, mesh2, mesh2.geometry.barycenter, e)
    assert np.allclose(val, traces.mean(axis=1))


def test_exact_constant_solution_has_zero_error(mesh2):
    # u = g/r = 2 with zero flux: v = 0, Dirichlet 2 on bottom/top
    c = Coefficients(mu=1.0, r=1.0, g=2.0, v=(0.0, 0.0, 0.0))
    bcs = {s: Neumann(0.0) for s in SIDES}
    bcs["bottom"] = bcs["top"] = Dirichlet(2.0)
    _, _, _, f = run(mesh2, ProblemSpec(c, c, bcs=bcs))
    exact = AnalyticSolution((Branch(0.0, 1.0, 1.0, 1.0, 2.0, 0.0),))
    rep = compute_errors(f, exact, mesh2)
    for k in ErrorReport.header()[2:]:
        assert getattr(rep, k) < 1e-13


def test_fields_consistent(mesh4):
    spec = unit_spec(kappa=2.0, sigma=1.0)
    es, _, sol, f = run(mesh4, spec)
    assert np.allclose(f.div_flux, 1.0 - f.u, atol=1e-12)  # g - r u
    assert np.abs(flux_jumps(f, mesh4)).max() < 1e-13
    assert np.abs(f.flux_balance(mesh4)).max() < 1e-13
    assert np.array_equal(f.uhat2, 2.0 * f.uhat1)


def test_profile_shape_and_jump(mesh4):
    spec = unit_spec(kappa=2.0, sigma=1.0)
    _, _, _, f = run(mesh4, spec)
    prof = line_profile(f, mesh4)
    assert prof.z.size == 6 * 4
    assert np.all(np.diff(prof.z) >= 0)
    below, above = prof.u_h[prof.z < 0.5], prof.u_h[prof.z > 0.5]
    assert above[:3].mean() > below[-3:].mean()
    col = central_column(mesh4)
    assert np.array_equal(col, prof.elements)


def test_profile_metrics_signs(mesh4):
    spec = unit_spec()
    _, _, _, f = run(mesh4, spec)
    prof = line_profile(f, mesh4)
    pm = profile_metrics(prof, nonactive_solution(1, 1, 1, 1))
    assert pm.profile_min <= pm.profile_max
    assert pm.overshoot == pytest.approx(pm.profile_max - 1.0)


def test_norm_relations_and_quadrature(mesh4):
    exact = nonactive_solution(1.0, 1.0, 1.0, 1.0)
    _, _, _, f = run(mesh4, unit_spec())
    r5 = compute_errors(f, exact, mesh4)
    r7 = compute_errors(f, exact, mesh4, degree=7)
    assert r5.err_J_Hdiv >= r5.err_J_L2
    for k in ErrorReport.header()[2:]:
        assert getattr(r5, k) == pytest.approx(getattr(r7, k), rel=1e-2)


def test_observed_orders_exact_power():
    reps = [ErrorReport(h, 0, *([h**2] * 7)) for h in (0.5, 0.25, 0.125)]
    for o in observed_orders(reps):
        assert all(v == pytest.approx(2.0) for v in o.values())


def test_csv_headers(tmp_path, mesh2):
    _, _, _, f = run(mesh2, unit_spec())
    write_profile_csv(tmp_path / "p.csv", line_profile(f, mesh2))
    write_errors_csv(tmp_path / "e.csv", [compute_errors(f, nonactive_solution(1, 1, 1, 1), mesh2)])
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "z,u_h,u_star"
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == ",".join(ErrorReport.header())
