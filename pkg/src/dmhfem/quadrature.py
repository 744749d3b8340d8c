"""Quadrature rules on tetrahedra, in barycentric coordinates.

Weights are normalised to sum to one, so an integral over K is
``|K| * sum(w * f(x_q))``.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def tet_rule(degree: int):
    """Return (bary (Q, 4), weights (Q,)) exact for polynomials of ``degree``."""
    if degree <= 1:
        return np.full((1, 4), 0.25), np.ones(1)
    if degree == 2:
        a = 0.5854101966249685
        b = 0.1381966011250105
        bary = np.full((4, 4), b)
        np.fill_diagonal(bary, a)
        return bary, np.full(4, 0.25)
    return conical_rule((degree + 2) // 2)


@lru_cache(maxsize=None)
def conical_rule(m: int):
    """Collapsed Gauss-Jacobi product rule with m**3 points, exact to 2m - 1."""
    xs, ws = roots_jacobi(m, 2.0, 0.0)
    xt, wt = roots_jacobi(m, 1.0, 0.0)
    xw, ww = roots_jacobi(m, 0.0, 0.0)
    s, t, w = (0.5 * (1.0 + x) for x in (xs, xt, xw))
    ws, wt, ww = ws / 8.0, wt / 4.0, ww / 2.0

    S, T, W = np.meshgrid(s, t, w, indexing="ij")
    weights = np.einsum("i,j,k->ijk", ws, wt, ww).ravel() * 6.0
    x = S.ravel()
    y = ((1 - S) * T).ravel()
    z = ((1 - S) * (1 - T) * W).ravel()
    bary = np.column_stack([1 - x - y - z, x, y, z])
    return bary, weights


def map_points(bary: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Physical points (..., Q, 3) for element vertices (..., 4, 3)."""
    return np.einsum("qi,...ik->...qk", bary, vertices)
