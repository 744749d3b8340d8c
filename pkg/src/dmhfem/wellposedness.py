"""Continuity, coercivity and smallness constants of the continuous problem.

Pure arithmetic on coefficient bounds. Two candidate values of the reaction
coercivity constant c0 are carried side by side:

* ``statement``: c0 = min(1/mu_max, r_min), the constant entering the
  advection bound ``|v| < 2 mu_min c0``;
* ``proof``: c0 = r_min - |v| / (2 mu_min), the lower bound actually obtained
  when estimating a(u, u).

Every quantity built from c0 (k_a, the constant script-M, delta) is reported
for both.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, fields

import numpy as np

from .mesh import build_cube_mesh
from .problem import ProblemSpec, Robin, evaluate

DEFAULT_TRACE_CONSTANT = 1.0
# constant coefficients are exact; callables are sampled on this mesh
BOUNDS_MESH_N = 8


class WellposednessError(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientBounds:
    mu_min: float
    mu_max: float
    r_min: float
    r_max: float
    v_max: float
    kappa_max: float
    alpha_max: float


@lru_cache(maxsize=1)
def _bounds_mesh():
    return build_cube_mesh(BOUNDS_MESH_N)


def _samples(coef, points, vector=False):
    if callable(coef):
        return evaluate(coef, points, vector)
    return evaluate(coef, points[:1], vector)


def coefficient_bounds(spec: ProblemSpec) -> CoefficientBounds:
    """Sup/inf of the data; callables are sampled at barycenters of a cube mesh."""
    mesh = _bounds_mesh()
    xb = mesh.geometry.barycenter
    mus, rs, vs = [], [], []
    for label in (1, 2):
        c = spec.subdomain(label)
        pts = xb[mesh.subdomain == label]
        mus.append(_samples(c.mu, pts))
        rs.append(_samples(c.r, pts))
        vs.append(np.linalg.norm(_samples(c.v, pts, vector=True), axis=1))
    mu, r, v = (np.concatenate(x) for x in (mus, rs, vs))
    fb = mesh.face_barycenters
    kappa = _samples(spec.kappa, fb[mesh.gamma_faces])
    alpha = [0.0]
    bfaces = fb[mesh.boundary_faces]
    for bc in spec.bcs.values():
        if isinstance(bc, Robin):
            alpha.append(float(np.max(np.abs(_samples(bc.alpha, bfaces)))))
    return CoefficientBounds(
        mu_min=float(mu.min()),
        mu_max=float(mu.max()),
        r_min=float(r.min()),
        r_max=float(np.abs(r).max()),
        v_max=float(v.max()),
        kappa_max=float(np.abs(kappa).max()),
        alpha_max=max(alpha),
    )


def _bounds(spec_or_bounds) -> CoefficientBounds:
    if isinstance(spec_or_bounds, CoefficientBounds):
        b = spec_or_bounds
    else:
        b = coefficient_bounds(spec_or_bounds)
    if b.mu_min <= 0:
        raise WellposednessError(f"mu_min must be positive, got {b.mu_min}")
    return b


def continuity_constants(spec) -> tuple[float, float, float]:
    """(M_a, M_b, M_c)."""
    b = _bounds(spec)
    M_a = (1.0 + b.v_max) / b.mu_min + b.r_max + 2.0
    return M_a, 1.0, max(b.kappa_max, b.alpha_max)


@dataclass(frozen=True)
class Coercivity:
    c0_statement: float
    c0_proof: float
    c1: float
    k_a_statement: float
    k_a_proof: float


def coercivity_constants(spec) -> Coercivity:
    b = _bounds(spec)
    drift = b.v_max / (2.0 * b.mu_min)
    c0s = min(1.0 / b.mu_max, b.r_min)
    c0p = b.r_min - drift
    c1 = 1.0 / b.mu_max - drift
    return Coercivity(c0s, c0p, c1, min(c0s, c1), min(c0p, c1))


def script_m(b: CoefficientBounds, c0: float) -> float:
    """The constant bounding max(kappa, |alpha|) from above via 1/(C* M);
    infinite when its denominator c0 - |v|/(2 mu_min) is not positive."""
    drift = b.v_max / (2.0 * b.mu_min)
    den = c0 - drift
    if den <= 0:
        return math.inf
    first = 2.0 + b.r_max + (1.0 + b.v_max) / b.mu_min
    return first * (c0 + 2.0 + b.r_max + 1.0 / b.mu_min + drift) / den


def delta(M_a: float, k_a: float, M_c: float, k_b: float) -> float:
    if k_a <= 0:
        return math.inf
    return M_a * (1.0 + M_a / k_a) * M_c / k_b**2


@dataclass(frozen=True)
class WellposednessReport:
    M_a: float
    M_b: float
    M_c: float
    c0_statement: float
    c0_proof: float
    c1: float
    k_a_statement: float
    k_a_proof: float
    C_star: float
    k_b: float
    script_M_statement: float
    script_M_proof: float
    delta_statement: float
    delta_proof: float
    advection_bound: bool
    interface_bound_statement: bool
    interface_bound_proof: bool
    delta_below_one_statement: bool
    delta_below_one_proof: bool

    def format(self) -> str:
        names = [f.name for f in fields(self)]
        width = max(map(len, names))
        lines = []
        for name in names:
            val = getattr(self, name)
            text = str(val).lower() if isinstance(val, bool) else f"{val:.10g}"
            lines.append(f"{name.ljust(width)} = {text}")
        lines.append(
            "# c0 has two candidate definitions (statement: min(1/mu_max, r_min); "
            "proof: r_min - |v|/(2 mu_min)); derived constants are given for both"
        )
        return "\n".join(lines)


def smallness(spec, C_star: float = DEFAULT_TRACE_CONSTANT) -> WellposednessReport:
    if not C_star > 0:
        raise WellposednessError(f"trace constant must be positive, got {C_star}")
    b = _bounds(spec)
    M_a, M_b, M_c = continuity_constants(b)
    co = coercivity_constants(b)
    k_b = 1.0 / C_star
    Ms = script_m(b, co.c0_statement)
    Mp = script_m(b, co.c0_proof)
    ds = delta(M_a, co.k_a_statement, M_c, k_b)
    dp = delta(M_a, co.k_a_proof, M_c, k_b)
    return WellposednessReport(
        M_a=M_a,
        M_b=M_b,
        M_c=M_c,
        c0_statement=co.c0_statement,
        c0_proof=co.c0_proof,
        c1=co.c1,
        k_a_statement=co.k_a_statement,
        k_a_proof=co.k_a_proof,
        C_star=float(C_star),
        k_b=k_b,
        script_M_statement=Ms,
        script_M_proof=Mp,
        delta_statement=ds,
        delta_proof=dp,
        advection_bound=b.v_max < 2.0 * b.mu_min * co.c0_statement,
        interface_bound_statement=M_c < 1.0 / (C_star * Ms),
        interface_bound_proof=M_c < 1.0 / (C_star * Mp),
        delta_below_one_statement=ds < 1.0,
        delta_below_one_proof=dp < 1.0,
    )
