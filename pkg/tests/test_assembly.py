import dataclasses

import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, settings, strategies as st

from dmhfem.assembly import (
    FULL_BLOCK_MAX_ELEMENTS,
    SingularSystemError,
    UnknownKind,
    assemble_reduced,
    number_unknowns,
    solve,
    solve_full_block,
    solve_sparse,
    write_matrix_market,
)
from dmhfem.condensation import element_system
from dmhfem.mesh import FaceClass, build_cube_mesh
from dmhfem.problem import (
    Coefficients,
    Neumann,
    ProblemSpec,
    Robin,
    SIDES,
    Stabilization,
    sample_boundary,
)

from conftest import run, unit_spec

ALL_ROBIN = {s: Robin(1.0, 0.5) for s in SIDES}
ALL_NEUMANN = {s: Neumann(0.0) for s in SIDES}


def test_numbering_all_robin(mesh2):
    dof = number_unknowns(mesh2, unit_spec(bcs=ALL_ROBIN))
    assert dof.count == mesh2.num_faces
    assert np.array_equal(dof.index, np.arange(mesh2.num_faces))
    assert np.all(dof.free)
    assert np.sum(dof.kind == UnknownKind.LAMBDA) == 8


def test_numbering_default_bc(mesh2):
    dof = number_unknowns(mesh2, unit_spec())
    fixed = np.flatnonzero(dof.kind == UnknownKind.DIRICHLET)
    z = mesh2.face_barycenters[fixed, 2]
    assert np.all((z == 0) | (z == 1))
    assert fixed.size == 2 * 2 * 2 * 2
    assert np.array_equal(dof.fixed_value[fixed], z)
    assert np.all(np.isnan(dof.fixed_value[dof.free]))


@pytest.mark.parametrize("bcs", [None, ALL_ROBIN])
def test_sparsity(mesh4, bcs):
    spec = unit_spec() if bcs is None else unit_spec(bcs=bcs)
    red = assemble_reduced(mesh4, spec)
    nnz = np.diff(red.K.indptr)
    boundary = mesh4.face_elements[:, 1] < 0
    free = red.dofmap.free
    assert nnz[~boundary & free].max() <= 7
    assert nnz[boundary & free].max() <= 4
    assert np.all(nnz[~free] == 1)


def test_dirichlet_rows_identity(mesh2):
    red = assemble_reduced(mesh2, unit_spec())
    K = red.K.tocsr()
    for i in np.flatnonzero(~red.dofmap.free):
        row = K.getrow(i)
        assert row.nnz == 1 and row.indices[0] == i and row.data[0] == 1.0
        assert red.t[i] == red.dofmap.fixed_value[i]


def test_interface_free_matches_single_domain(mesh2):
    spec = unit_spec(bcs=ALL_ROBIN)
    red = assemble_reduced(mesh2, spec)
    fc = np.array(mesh2.face_class)
    fc[fc == FaceClass.GAMMA] = FaceClass.INTERIOR1
    plain = dataclasses.replace(mesh2, face_class=fc)
    red0 = assemble_reduced(plain, spec)
    assert abs(red.K - red0.K).max() < 1e-14
    assert np.allclose(red.t, red0.t, atol=1e-15)


def test_constant_trace_gives_reaction_sink(mesh2):
    c = Coefficients(mu=1.0, r=2.0, g=0.0, v=(0.0, 0.0, 0.0))
    spec = ProblemSpec(c, c, bcs=ALL_NEUMANN)
    es = element_system(mesh2, spec)
    red = assemble_reduced(mesh2, spec, es.condensed)
    cval = 1.7
    u = es.condensed.scalar(np.full((mesh2.num_elements, 4), cval))
    sink = -np.sum(2.0 * mesh2.geometry.volume * u)
    assert np.sum(red.K @ np.full(red.dofmap.count, cval)) == pytest.approx(sink, rel=1e-12)


def test_symmetric_without_advection(mesh2):
    c = Coefficients(mu=0.7, r=1.5, g=1.0, v=(0.0, 0.0, 0.0))
    red = assemble_reduced(mesh2, ProblemSpec(c, c, kappa=1.0))
    free = np.flatnonzero(red.dofmap.free)
    Kf = red.K[free][:, free]
    assert abs(Kf - Kf.T).max() < 1e-13


def test_global_conservation(mesh2):
    q = 0.3
    c = Coefficients(mu=1.0, r=1.0, g=2.0, v=(0.0, 0.0, 0.5))
    spec = ProblemSpec(c, c, sigma=0.4, bcs={s: Neumann(q) for s in SIDES})
    es, red, sol, fields = run(mesh2, spec)
    areas = mesh2.face_areas
    lhs = q * areas[mesh2.boundary_faces].sum() - 0.4 * areas[mesh2.gamma_faces].sum()
    rhs = np.sum((2.0 - 1.0 * fields.u) * mesh2.geometry.volume)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_traversal_order_independent(mesh2, rng):
    spec = unit_spec(kappa=2.0, sigma=1.0)
    red = assemble_reduced(mesh2, spec)
    perm = rng.permutation(mesh2.num_elements)
    inv = np.argsort(perm)
    fe = np.where(mesh2.face_elements >= 0, inv[np.maximum(mesh2.face_elements, 0)], -1)
    shuffled = dataclasses.replace(
        mesh2,
        elements=mesh2.elements[perm],
        subdomain=mesh2.subdomain[perm],
        element_faces=mesh2.element_faces[perm],
        element_face_signs=mesh2.element_face_signs[perm],
        face_elements=fe,
    )
    red2 = assemble_reduced(shuffled, spec)
    assert abs(red.K - red2.K).max() < 1e-14
    assert np.allclose(red.t, red2.t, atol=1e-14)


def test_wrong_condensed_size(mesh2, mesh4):
    es = element_system(mesh2, unit_spec())
    with pytest.raises(ValueError):
        assemble_reduced(mesh4, unit_spec(), es.condensed)


def test_identity_solve():
    n = 5
    x, res = solve_sparse(sps.identity(n, format="csr"), np.eye(n)[0])
    assert np.array_equal(x, np.eye(n)[0]) and res == 0


def test_singular_system():
    K = sps.csr_matrix(np.array([[1.0, 0, 0], [0, 0, 0], [0, 0, 2.0]]))
    with pytest.raises(SingularSystemError) as exc:
        solve_sparse(K, np.ones(3))
    assert exc.value.equation == 1


def test_iterative_path(mesh4):
    red = assemble_reduced(mesh4, unit_spec(kappa=2.0, sigma=1.0))
    x_direct, _ = solve_sparse(red.K, red.t)
    x_iter, res = solve_sparse(red.K, red.t, direct_limit=0)
    assert res <= 1e-10
    assert np.allclose(x_iter, x_direct, atol=1e-9)


def test_residual_small(mesh2):
    _, red, sol, _ = run(mesh2, unit_spec())
    assert sol.residual <= 1e-10
    assert np.linalg.norm(red.K @ sol.values - red.t) <= 1e-10 * np.linalg.norm(red.t)


def test_segregation_exact(mesh2):
    _, _, sol, _ = run(mesh2, unit_spec(kappa=2.0, sigma=1.0))
    assert np.array_equal(sol.uhat2, 2.0 * sol.uhat1)


@pytest.mark.parametrize("kappa, sigma", [(1.0, 0.0), (2.0, 1.0), (0.5, -0.7)])
def test_full_block_agrees(mesh2, kappa, sigma):
    spec = unit_spec(kappa=kappa, sigma=sigma)
    es, red, sol, fields = run(mesh2, spec)
    fb = solve_full_block(mesh2, spec, es)
    assert np.allclose(fields.flux, fb.flux, atol=1e-12)
    assert np.allclose(fields.u, fb.u, atol=1e-12)
    assert np.allclose(sol.lam, fb.lam, atol=1e-12)
    assert np.allclose(sol.uhat2, fb.uhat2, atol=1e-12)
    nong = np.setdiff1d(np.arange(mesh2.num_faces), mesh2.gamma_faces)
    assert np.allclose(sol.values[nong], fb.uhat[nong], atol=1e-12)
    # interface multipliers are the one-sided normal flux densities
    assert np.allclose(fields.j1, fb.j1, atol=1e-12)
    assert np.allclose(fields.j2, fb.j2, atol=1e-12)
    if kappa == 1.0 and sigma == 0.0:
        assert np.allclose(fb.uhat[mesh2.gamma_faces], fb.uhat2, atol=1e-12)
        assert np.allclose(fb.lam, fb.uhat2, atol=1e-12)


def test_full_block_size_guard():
    m = build_cube_mesh(8)
    assert m.num_elements > FULL_BLOCK_MAX_ELEMENTS
    with pytest.raises(ValueError):
        solve_full_block(m, unit_spec())


def test_matrix_market_roundtrip(tmp_path, mesh2):
    from scipy.io import mmread

    red = assemble_reduced(mesh2, unit_spec())
    write_matrix_market(tmp_path / "sys", red)
    K = mmread(tmp_path / "sys_K.mtx")
    t = mmread(tmp_path / "sys_t.mtx")
    assert abs(sps.csr_matrix(K) - red.K).max() < 1e-14
    assert np.allclose(np.ravel(t), red.t)


@settings(max_examples=15, deadline=None)
@given(
    mu=st.floats(0.5, 2.0),
    r=st.floats(1.0, 3.0),
    g=st.floats(-2.0, 2.0),
    vz=st.floats(-0.4, 0.4),
    kappa=st.floats(0.2, 3.0),
    sigma=st.floats(-2.0, 2.0),
    mode=st.sampled_from(list(Stabilization)),
)
def test_full_block_random(mu, r, g, vz, kappa, sigma, mode):
    mesh = build_cube_mesh(2)
    c = Coefficients(mu=mu, r=r, g=g, v=(0.1, 0.0, vz))
    spec = ProblemSpec(c, c, kappa=kappa, sigma=sigma, stabilization=mode, bcs=ALL_ROBIN)
    es, red, sol, fields = run(mesh, spec)
    fb = solve_full_block(mesh, spec, es)
    scale = max(1.0, np.abs(fb.u).max())
    assert np.abs(fields.u - fb.u).max() <= 1e-9 * scale
    assert np.abs(sol.lam - fb.lam).max() <= 1e-9 * scale
