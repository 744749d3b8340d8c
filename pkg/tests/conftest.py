import numpy as np
import pytest

from dmhfem.assembly import assemble_reduced, solve
from dmhfem.condensation import element_system
from dmhfem.mesh import build_cube_mesh
from dmhfem.postprocess import recover_fields
from dmhfem.problem import Coefficients, ProblemSpec


@pytest.fixture(scope="session")
def mesh2():
    return build_cube_mesh(2)


@pytest.fixture(scope="session")
def mesh4():
    return build_cube_mesh(4)


@pytest.fixture(scope="session")
def mesh8():
    return build_cube_mesh(8)


def unit_spec(**kw):
    """mu = r = g = v_z = 1 on both sides, default boundary data."""
    c = Coefficients(mu=1.0, r=1.0, g=1.0, v=(0.0, 0.0, 1.0))
    kw.setdefault("omega1", c)
    kw.setdefault("omega2", c)
    return ProblemSpec(**kw)


def run(mesh, spec):
    es = element_system(mesh, spec)
    red = assemble_reduced(mesh, spec, es.condensed)
    sol = solve(red, mesh)
    return es, red, sol, recover_fields(sol, es.condensed, mesh)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
