"""Element fields from the face solution, the piecewise-linear nonconforming
interpolant of the hybrid variable, error norms and line profiles."""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields as dc_fields

import numpy as np

from .analytic import AnalyticSolution
from .assembly import FaceSolution
from .condensation import CondensedElement
from .mesh import FaceClass, Mesh, mesh_size, write_vtk
from .quadrature import map_points, tet_rule

L2_DEGREE = 5
AVERAGE_DEGREE = 5


@dataclass(frozen=True)
class SolutionFields:
    """Recovered discrete solution.

    ``flux`` holds the four outward face fluxes of each element, ``traces``
    the hybrid values each element sees on its faces. On the interface faces
    (``gamma_faces``) ``j1``/``j2`` are the one-sided normal flux densities
    J_i.n_i and ``uhat1``/``uhat2`` the one-sided traces.
    """

    u: np.ndarray
    flux: np.ndarray
    traces: np.ndarray
    uhat: np.ndarray
    gamma_faces: np.ndarray
    uhat1: np.ndarray
    uhat2: np.ndarray
    lam: np.ndarray
    j1: np.ndarray
    j2: np.ndarray
    sigma: np.ndarray
    volume: np.ndarray

    @property
    def div_flux(self) -> np.ndarray:
        """Element-wise divergence of J_h (constant on each element)."""
        return self.flux.sum(axis=1) / self.volume

    def flux_balance(self, mesh: Mesh) -> np.ndarray:
        """|F| (j1 + j2 + sigma) per interface face."""
        return mesh.face_areas[self.gamma_faces] * (self.j1 + self.j2 + self.sigma)


def _local_index(mesh: Mesh, elems: np.ndarray, faces: np.ndarray) -> np.ndarray:
    hit = mesh.element_faces[elems] == faces[:, None]
    return hit.argmax(axis=1)


def recover_fields(
    face_solution: FaceSolution, condensed: CondensedElement, mesh: Mesh
) -> SolutionFields:
    traces = face_solution.element_traces(mesh)
    flux = condensed.flux(traces)
    u = condensed.scalar(traces)
    gamma = mesh.gamma_faces
    pair = mesh.face_elements[gamma]
    lower = np.where(mesh.subdomain[pair[:, 0]] == 1, pair[:, 0], pair[:, 1])
    upper = np.where(mesh.subdomain[pair[:, 0]] == 1, pair[:, 1], pair[:, 0])
    area = mesh.face_areas[gamma]
    j1 = flux[lower, _local_index(mesh, lower, gamma)] / area
    j2 = flux[upper, _local_index(mesh, upper, gamma)] / area
    uhat = face_solution.values[face_solution.dofmap.index]
    return SolutionFields(
        u=u,
        flux=flux,
        traces=traces,
        uhat=uhat,
        gamma_faces=gamma,
        uhat1=face_solution.uhat1,
        uhat2=face_solution.uhat2,
        lam=face_solution.lam,
        j1=j1,
        j2=j2,
        sigma=face_solution.sigma,
        volume=mesh.geometry.volume,
    )


def flux_jumps(fields: SolutionFields, mesh: Mesh) -> np.ndarray:
    """Sum of the two outward fluxes on every interior (non-interface) face."""
    interior = mesh.faces_of_class(FaceClass.INTERIOR1, FaceClass.INTERIOR2)
    pair = mesh.face_elements[interior]
    a = fields.flux[pair[:, 0], _local_index(mesh, pair[:, 0], interior)]
    b = fields.flux[pair[:, 1], _local_index(mesh, pair[:, 1], interior)]
    return a + b


def flux_vectors(fields: SolutionFields, mesh: Mesh, points, elements) -> np.ndarray:
    """RT0 flux J_h at points (N, 3) lying in the given elements (N,)."""
    verts = mesh.geometry.vertices[elements]
    tau = (np.asarray(points)[:, None, :] - verts) / (
        3.0 * fields.volume[elements][:, None, None]
    )
    return np.einsum("ni,nik->nk", fields.flux[elements], tau)


def barycentric(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates (N, 4) of points (N, 3) in tetrahedra (N, 4, 3)."""
    T = np.concatenate([np.ones(vertices.shape[:-1] + (1,)), vertices], axis=-1)
    rhs = np.concatenate([np.ones(points.shape[:-1] + (1,)), points], axis=-1)
    if np.any(np.abs(np.linalg.det(T)) < 1e-300):
        raise ValueError("degenerate element")
    return np.linalg.solve(np.swapaxes(T, -1, -2), rhs[..., None])[..., 0]


def cr_interpolant(traces: np.ndarray, mesh: Mesh, points, elements) -> np.ndarray:
    """Piecewise-linear function matching the hybrid values at the face
    barycenters: on K, ``u*(x) = sum_i û_i (1 - 3 l_i(x))`` with l_i the
    barycentric coordinate of the vertex opposite face i.

    ``traces`` is (NE, 4) as seen from each element, so interface faces use
    the trace of the element's own subdomain.
    """
    elements = np.asarray(elements)
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    lam = barycentric(mesh.geometry.vertices[elements], points)
    return np.einsum("ni,ni->n", traces[elements], 1.0 - 3.0 * lam)


@dataclass(frozen=True)
class ErrorReport:
    h: float
    n: int
    err_u_L2: float
    err_u_maxh: float
    err_P0u_L2: float
    err_ustar_L2: float
    err_J_maxh: float
    err_J_L2: float
    err_J_Hdiv: float

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in dc_fields(cls)]

    def row(self) -> list:
        return list(astuple(self))


def compute_errors(
    fields: SolutionFields, exact: AnalyticSolution, mesh: Mesh, degree: int = L2_DEGREE
) -> ErrorReport:
    geo = mesh.geometry
    vol = geo.volume
    label = mesh.subdomain
    ne = mesh.num_elements

    bary, w = tet_rule(degree)
    nq = w.size
    pts = map_points(bary, geo.vertices).reshape(-1, 3)
    elem = np.repeat(np.arange(ne), nq)
    lab = label[elem]

    u_ex = exact.u_at(pts, lab).reshape(ne, nq)
    err_u = np.sqrt(np.sum(vol * ((u_ex - fields.u[:, None]) ** 2 @ w)))

    ustar = np.einsum("ei,qi->eq", fields.traces, 1.0 - 3.0 * bary)
    err_ustar = np.sqrt(np.sum(vol * ((u_ex - ustar) ** 2 @ w)))

    J_ex = exact.J_at(pts, lab)
    J_h = flux_vectors(fields, mesh, pts, elem)
    dJ = np.sum((J_ex - J_h) ** 2, axis=1).reshape(ne, nq)
    err_J = np.sqrt(np.sum(vol * (dJ @ w)))
    div_ex = exact.divJ_at(pts, lab).reshape(ne, nq)
    ddiv = (div_ex - fields.div_flux[:, None]) ** 2
    err_div = np.sqrt(np.sum(vol * (ddiv @ w)))

    ba, wa = tet_rule(AVERAGE_DEGREE)
    pa = map_points(ba, geo.vertices).reshape(-1, 3)
    ua = exact.u_at(pa, np.repeat(label, wa.size)).reshape(ne, wa.size)
    p0u = ua @ wa
    err_p0 = np.sqrt(np.sum(vol * (p0u - fields.u) ** 2))

    xb = geo.barycenter
    err_umax = np.max(np.abs(exact.u_at(xb, label) - fields.u))
    Jb = flux_vectors(fields, mesh, xb, np.arange(ne))
    err_Jmax = np.max(np.linalg.norm(exact.J_at(xb, label) - Jb, axis=1))

    return ErrorReport(
        h=mesh_size(mesh),
        n=mesh.n,
        err_u_L2=float(err_u),
        err_u_maxh=float(err_umax),
        err_P0u_L2=float(err_p0),
        err_ustar_L2=float(err_ustar),
        err_J_maxh=float(err_Jmax),
        err_J_L2=float(err_J),
        err_J_Hdiv=float(np.hypot(err_J, err_div)),
    )


def observed_orders(reports: list[ErrorReport]) -> list[dict]:
    """log2(e_2h / e_h) for each norm between consecutive meshes."""
    names = ErrorReport.header()[2:]
    out = []
    for coarse, fine in zip(reports, reports[1:]):
        ratio = np.log(coarse.h / fine.h)
        out.append(
            {k: float(np.log(getattr(coarse, k) / getattr(fine, k)) / ratio) for k in names}
        )
    return out


@dataclass(frozen=True)
class LineProfile:
    z: np.ndarray
    u_h: np.ndarray
    u_star: np.ndarray
    elements: np.ndarray


def central_column(mesh: Mesh) -> np.ndarray:
    """Elements of the cube column [0.5, 0.5 + 1/n]^2 x [0, 1], sorted by z."""
    xb = mesh.geometry.barycenter
    lo, hi = 0.5, 0.5 + 1.0 / mesh.n
    sel = np.all((xb[:, :2] > lo) & (xb[:, :2] < hi), axis=1)
    elems = np.flatnonzero(sel)
    return elems[np.argsort(xb[elems, 2], kind="stable")]


def line_profile(fields: SolutionFields, mesh: Mesh) -> LineProfile:
    elems = central_column(mesh)
    xb = mesh.geometry.barycenter[elems]
    return LineProfile(
        z=xb[:, 2],
        u_h=fields.u[elems],
        u_star=cr_interpolant(fields.traces, mesh, xb, elems),
        elements=elems,
    )


@dataclass(frozen=True)
class ProfileMetrics:
    """``overshoot`` = max of the profile minus max of the exact solution;
    ``undershoot`` = min of the exact solution minus min of the profile."""

    overshoot: float
    undershoot: float
    profile_min: float
    profile_max: float


def profile_metrics(profile: LineProfile, exact: AnalyticSolution | None = None) -> ProfileMetrics:
    pmax, pmin = float(profile.u_h.max()), float(profile.u_h.min())
    if exact is None:
        emax, emin = 1.0, 0.0
    else:
        z = np.linspace(0.0, 1.0, 20001)
        u = exact.u(z)
        emax, emin = float(u.max()), float(u.min())
        if exact.active:
            # both one-sided limits at the interface
            lim = exact.u(np.array([0.5, 0.5]), np.array([1, 2]))
            emax, emin = max(emax, lim.max()), min(emin, lim.min())
    return ProfileMetrics(pmax - emax, emin - pmin, pmin, pmax)


def write_errors_csv(path, reports: list[ErrorReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ErrorReport.header())
        for rep in reports:
            w.writerow([f"{x:.10e}" if isinstance(x, float) else x for x in rep.row()])


def write_profile_csv(path, profile: LineProfile) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["z", "u_h", "u_star"])
        for row in zip(profile.z, profile.u_h, profile.u_star):
            w.writerow([f"{x:.10e}" for x in row])


def write_fields_vtk(path, fields: SolutionFields, mesh: Mesh) -> None:
    xb = mesh.geometry.barycenter
    J = flux_vectors(fields, mesh, xb, np.arange(mesh.num_elements))
    write_vtk(path, mesh, cell_scalars={"u_h": fields.u}, cell_vectors={"J_h": J})
