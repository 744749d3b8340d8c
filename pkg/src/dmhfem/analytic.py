"""Closed-form reference solutions depending on z only.

With constant data and v = (0, 0, v_z) the problem reduces on each
subdomain to ``-mu u'' + v_z u' + r u = g`` whose solutions are
``g/r + A e^{l1 z} + B e^{l2 z}`` with ``l1,2 = (v_z +- sqrt(v_z^2 + 4 r mu))
/ (2 mu)``. Each branch on [a, b] is stored in the shifted form

    u(z) = g/r + A exp(l1 (z - b)) + B exp(l2 (z - a))

so that no exponential exceeds one on its own interval; this keeps the
evaluation finite when l1 is in the hundreds.

The flux is ``J_z = v_z u - mu u'``. Across the interface z = 0.5 the
outward normal of the lower subdomain is +e3, so the flux balance
``J1.n1 + J2.n2 = -sigma`` reads ``J_z(0.5-) - J_z(0.5+) = -sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INTERFACE_Z = 0.5


class AnalyticError(ValueError):
    pass


def exponents(mu: float, r: float, vz: float) -> tuple[float, float]:
    """(l1, l2) with l1 > 0 > l2, the small root computed without cancellation."""
    if mu <= 0 or r <= 0:
        raise AnalyticError(f"need mu > 0 and r > 0, got mu={mu}, r={r}")
    disc = np.sqrt(vz * vz + 4.0 * r * mu)
    if vz >= 0:
        l1 = (vz + disc) / (2.0 * mu)
        l2 = -2.0 * r / (vz + disc)
    else:
        l2 = (vz - disc) / (2.0 * mu)
        l1 = -2.0 * r / (vz - disc)
    return float(l1), float(l2)


@dataclass(frozen=True)
class Branch:
    """One exponential branch on [a, b]."""

    a: float
    b: float
    mu: float
    r: float
    g: float
    vz: float
    A: float = 0.0
    B: float = 0.0

    @property
    def lam(self) -> tuple[float, float]:
        return exponents(self.mu, self.r, self.vz)

    def modes(self, z):
        """Values and derivatives of the two shifted exponentials."""
        l1, l2 = self.lam
        z = np.asarray(z, dtype=float)
        e1 = np.exp(l1 * (z - self.b))
        e2 = np.exp(l2 * (z - self.a))
        return e1, e2, l1 * e1, l2 * e2

    def u(self, z):
        e1, e2, _, _ = self.modes(z)
        return self.g / self.r + self.A * e1 + self.B * e2

    def du(self, z):
        _, _, d1, d2 = self.modes(z)
        return self.A * d1 + self.B * d2

    def J(self, z):
        return self.vz * self.u(z) - self.mu * self.du(z)

    def divJ(self, z):
        return self.g - self.r * self.u(z)


@dataclass(frozen=True)
class AnalyticSolution:
    """Piecewise reference solution; ``branches[k]`` belongs to subdomain k+1.

    A non-active solution has a single branch covering [0, 1].
    """

    branches: tuple
    kappa: float = 1.0
    sigma: float = 0.0

    @property
    def active(self) -> bool:
        return len(self.branches) == 2

    @property
    def lambdas(self) -> tuple:
        return tuple(b.lam for b in self.branches)

    def _pick(self, z, label):
        z = np.asarray(z, dtype=float)
        if not self.active:
            return z, np.zeros(z.shape, dtype=int)
        if label is None:
            idx = (z >= INTERFACE_Z).astype(int)
        else:
            idx = np.broadcast_to(np.asarray(label) - 1, z.shape)
        return z, idx

    def _eval(self, name, z, label):
        z, idx = self._pick(z, label)
        out = np.empty(z.shape)
        for k, br in enumerate(self.branches):
            sel = idx == k
            out[sel] = getattr(br, name)(z[sel])
        return out[()] if out.ndim == 0 else out

    def u(self, z, label=None):
        """u(z); ``label`` (1 or 2) selects the branch, else z < 0.5 -> 1."""
        return self._eval("u", z, label)

    def J(self, z, label=None):
        """z-component of the flux."""
        return self._eval("J", z, label)

    def divJ(self, z, label=None):
        return self._eval("divJ", z, label)

    # vector forms at 3D points
    def u_at(self, points, labels=None):
        return self.u(np.asarray(points)[..., 2], labels)

    def J_at(self, points, labels=None):
        points = np.asarray(points)
        out = np.zeros(points.shape)
        out[..., 2] = self.J(points[..., 2], labels)
        return out

    def divJ_at(self, points, labels=None):
        return self.divJ(np.asarray(points)[..., 2], labels)


def nonactive_solution(mu: float, r: float, g: float, vz: float) -> AnalyticSolution:
    """Single-domain solution with u(0) = 0, u(1) = 1."""
    br = Branch(0.0, 1.0, mu, r, g, vz)
    e1, e2, _, _ = br.modes(np.array([0.0, 1.0]))
    C = np.array([[e1[0], e2[0]], [e1[1], e2[1]]])
    rhs = np.array([0.0, 1.0]) - g / r
    A, B = np.linalg.solve(C, rhs)
    return AnalyticSolution((Branch(0.0, 1.0, mu, r, g, vz, A, B),))


def unshifted_coefficients(mu: float, r: float, g: float, vz: float) -> tuple[float, float]:
    """(C1, C2) of ``u = C1 e^{l1 z} + C2 e^{l2 z} + g/r`` on [0, 1].

    Closed form; overflows for large l1, use ``nonactive_solution`` there.
    """
    l1, l2 = exponents(mu, r, vz)
    e1, e2 = np.exp(l1), np.exp(l2)
    q = g / r
    C1 = (-1.0 + q * (1.0 - e2)) / (e2 - e1)
    C2 = (1.0 - q * (1.0 - e1)) / (e2 - e1)
    return float(C1), float(C2)


def _pair(x):
    x = np.broadcast_to(np.asarray(x, dtype=float), (2,))
    return float(x[0]), float(x[1])


def active_solution(mu, r, g, vz, kappa: float, sigma: float) -> AnalyticSolution:
    """Two-branch solution with u(0)=0, u(1)=1 and at z = 0.5
    ``u(0.5+) = kappa u(0.5-)`` and ``J_z(0.5-) - J_z(0.5+) = -sigma``.

    ``mu, r, g, vz`` may be scalars or pairs (lower, upper subdomain).
    """
    mu, r, g, vz = (_pair(p) for p in (mu, r, g, vz))
    b1 = Branch(0.0, INTERFACE_Z, mu[0], r[0], g[0], vz[0])
    b2 = Branch(INTERFACE_Z, 1.0, mu[1], r[1], g[1], vz[1])
    z0, zi, z1 = 0.0, INTERFACE_Z, 1.0
    a0 = b1.modes(z0)
    a1 = b1.modes(zi)
    c1 = b2.modes(zi)
    c2 = b2.modes(z1)

    def flux_row(br, m):
        e1, e2, d1, d2 = m
        return [br.vz * e1 - br.mu * d1, br.vz * e2 - br.mu * d2]

    q1, q2 = g[0] / r[0], g[1] / r[1]
    C = np.array(
        [
            [a0[0], a0[1], 0.0, 0.0],
            flux_row(b1, a1) + [-x for x in flux_row(b2, c1)],
            [-kappa * a1[0], -kappa * a1[1], c1[0], c1[1]],
            [0.0, 0.0, c2[0], c2[1]],
        ]
    )
    rhs = np.array(
        [
            -q1,
            -sigma - vz[0] * q1 + vz[1] * q2,
            kappa * q1 - q2,
            1.0 - q2,
        ]
    )
    if np.linalg.cond(C) > 1e14:
        raise AnalyticError("interface system is singular")
    A1, B1, A2, B2 = np.linalg.solve(C, rhs)
    return AnalyticSolution(
        (
            Branch(0.0, INTERFACE_Z, mu[0], r[0], g[0], vz[0], A1, B1),
            Branch(INTERFACE_Z, 1.0, mu[1], r[1], g[1], vz[1], A2, B2),
        ),
        kappa=float(kappa),
        sigma=float(sigma),
    )


def condition_residuals(sol: AnalyticSolution) -> dict:
    """Boundary and interface residuals."""
    out = {
        "u(0)": abs(float(sol.u(0.0, 1))),
        "u(1)-1": abs(float(sol.u(1.0, len(sol.branches))) - 1.0),
    }
    if sol.active:
        z = INTERFACE_Z
        out["segregation"] = abs(float(sol.u(z, 2) - sol.kappa * sol.u(z, 1)))
        out["flux balance"] = abs(float(sol.J(z, 1) - sol.J(z, 2) + sol.sigma))
    return out


def ode_residual(sol: AnalyticSolution, points: int = 2001) -> float:
    """Max of |-(mu u')' + (v_z u)' + r u - g| on a grid, using fourth-order
    central differences of the branch formulas (each branch is evaluated
    on its own stencil, so the interface does not pollute the estimate)."""
    worst = 0.0
    for br in sol.branches:
        lmax = max(abs(x) for x in br.lam)
        h = min(1e-3, 0.01 / lmax)
        z = np.linspace(br.a, br.b, points)
        u = [br.u(z + k * h) for k in (-2, -1, 0, 1, 2)]
        d1 = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
        d2 = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h)
        res = -br.mu * d2 + br.vz * d1 + br.r * u[2] - br.g
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def residual_check(sol: AnalyticSolution) -> float:
    """Largest of the ODE, boundary and interface residuals."""
    return max([ode_residual(sol), *condition_residuals(sol).values()])
