import itertools

import numpy as np
import pytest
from math import factorial

from dmhfem.quadrature import conical_rule, map_points, tet_rule


def monomial_integral(a, b, c):
    """Integral of x^a y^b z^c over the reference tetrahedron."""
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)


@pytest.mark.parametrize("degree", [1, 2, 3, 5, 7])
def test_exact_on_monomials(degree):
    bary, w = tet_rule(degree)
    ref = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    pts = map_points(bary, ref)
    for a, b, c in itertools.product(range(degree + 1), repeat=3):
        if a + b + c > degree:
            continue
        q = np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c) / 6.0
        assert q == pytest.approx(monomial_integral(a, b, c), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_conical_weights(m):
    bary, w = conical_rule(m)
    assert w.size == m**3
    assert w.sum() == pytest.approx(1.0)
    assert np.all(bary >= 0) and np.allclose(bary.sum(axis=1), 1.0)
