import numpy as np
import pytest

from dmhfem.mesh import FaceClass
from dmhfem.problem import (
    BoundaryData,
    Coefficients,
    Dirichlet,
    Neumann,
    ProblemError,
    ProblemSpec,
    Robin,
    boundary_condition,
    default_bcs,
    evaluate,
    sample_boundary,
    sample_element,
    sample_interface,
)


def test_sample_element_unit(mesh4):
    c = Coefficients(1.0, 1.0, 1.0, (0, 0, 1))
    s = sample_element(ProblemSpec(c, c), mesh4, 17)
    assert (s.mu, s.r, s.g) == (1.0, 1.0, 1.0)
    assert np.array_equal(s.v, [0, 0, 1])


def test_sample_element_by_subdomain(mesh4):
    spec = ProblemSpec(Coefficients(mu=1.0, v=(0, 0, 1)), Coefficients(mu=0.0325, v=(0, 0, 1)))
    upper = np.flatnonzero(mesh4.subdomain == 2)[0]
    lower = np.flatnonzero(mesh4.subdomain == 1)[0]
    assert sample_element(spec, mesh4, upper).mu == 0.0325
    assert sample_element(spec, mesh4, lower).mu == 1.0


def test_zero_velocity(mesh2):
    s = sample_element(ProblemSpec(), mesh2, 0)
    assert np.all(s.v == 0)


def test_callable_coefficient(mesh2):
    spec = ProblemSpec(Coefficients(mu=lambda p: 1 + p[:, 2]), Coefficients())
    e = np.flatnonzero(mesh2.subdomain == 1)[0]
    z = mesh2.geometry.barycenter[e, 2]
    assert sample_element(spec, mesh2, e).mu == pytest.approx(1 + z)


def test_default_boundary(mesh2):
    spec = ProblemSpec()
    fb = mesh2.face_barycenters
    for f in mesh2.boundary_faces:
        bc = boundary_condition(spec, mesh2, f)
        z = fb[f, 2]
        if z == 0:
            assert bc == Dirichlet(0.0)
        elif z == 1:
            assert bc == Dirichlet(1.0)
        else:
            assert bc == Neumann(0.0)


def test_boundary_query_interior(mesh2):
    f = mesh2.faces_of_class(FaceClass.INTERIOR1)[0]
    with pytest.raises(ProblemError):
        boundary_condition(ProblemSpec(), mesh2, f)


def test_every_boundary_face_has_one_condition(mesh4):
    bd = sample_boundary(ProblemSpec(), mesh4)
    assert bd.faces.size == mesh4.boundary_faces.size
    assert set(np.unique(bd.kind)) <= {BoundaryData.DIRICHLET, BoundaryData.NEUMANN}


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(omega1=Coefficients(mu=0.0)),
        dict(kappa=-1.0),
        dict(bcs={**default_bcs(), "top": Robin(alpha=0.0)}),
        dict(bcs={"top": Dirichlet(1.0)}),
    ],
)
def test_invalid_spec(kwargs):
    with pytest.raises(ProblemError):
        ProblemSpec(**kwargs)


def test_interface_sampling(mesh2):
    faces, kappa, sigma = sample_interface(ProblemSpec(kappa=2.0, sigma=lambda p: p[:, 0]), mesh2)
    assert np.all(kappa == 2.0)
    assert np.allclose(sigma, mesh2.face_barycenters[faces, 0])


def test_evaluate_shapes():
    pts = np.zeros((5, 3))
    assert evaluate(2.0, pts).shape == (5,)
    assert evaluate((1, 2, 3), pts, vector=True).shape == (5, 3)
