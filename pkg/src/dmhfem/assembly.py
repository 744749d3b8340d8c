"""Global face-based system K U = t and its solution.

One unknown per mesh face: the hybrid trace û on faces off the interface and
the multiplier lambda on interface faces. On an interface face the element
in Omega_1 sees û_1 = lambda and the element in Omega_2 sees
û_2 = kappa * lambda, so the local maps of the two neighbours are combined
with a column scaling of 1 or kappa.

Rows, all in flux-integral units (flux dofs are face integrals of J.n):

* interior face: sum of the outward fluxes of the two neighbours = 0
* interface face: the same sum = -sigma |F|
* Robin face: Phi - alpha |F| û = -beta |F|
* Neumann face: Phi = q |F|
* Dirichlet face: identity row, û = value
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .condensation import CondensedElement, ElementSystem, element_system
from .mesh import FaceClass, Mesh
from .problem import BoundaryData, ProblemSpec, sample_boundary, sample_interface

log = logging.getLogger(__name__)

DIRECT_SOLVER_LIMIT = 200_000
RESIDUAL_TOL = 1e-10
FULL_BLOCK_MAX_ELEMENTS = 3000


class UnknownKind(enum.IntEnum):
    HYBRID = 0
    LAMBDA = 1
    DIRICHLET = 2


class SolverError(ArithmeticError):
    pass


class SingularSystemError(SolverError):
    def __init__(self, equation=None):
        self.equation = equation
        where = "" if equation is None else f" (equation {equation})"
        super().__init__(f"reduced system is singular{where}")


@dataclass(frozen=True)
class DofMap:
    """Face id -> unknown index, unknown kinds and Dirichlet values."""

    index: np.ndarray
    kind: np.ndarray
    fixed_value: np.ndarray

    @property
    def count(self) -> int:
        return self.kind.size

    @property
    def free(self) -> np.ndarray:
        return self.kind != UnknownKind.DIRICHLET


def number_unknowns(mesh: Mesh, spec: ProblemSpec) -> DofMap:
    nf = mesh.num_faces
    kind = np.full(nf, UnknownKind.HYBRID, dtype=int)
    kind[mesh.gamma_faces] = UnknownKind.LAMBDA
    fixed = np.full(nf, np.nan)
    bd = sample_boundary(spec, mesh)
    dir_ = bd.kind == BoundaryData.DIRICHLET
    kind[bd.faces[dir_]] = UnknownKind.DIRICHLET
    fixed[bd.faces[dir_]] = bd.value[dir_]
    return DofMap(index=np.arange(nf), kind=kind, fixed_value=fixed)


def trace_scaling(mesh: Mesh, kappa_on_gamma: np.ndarray) -> np.ndarray:
    """(NE, 4) factors mapping face unknowns to the traces each element sees."""
    kappa_face = np.ones(mesh.num_faces)
    kappa_face[mesh.gamma_faces] = kappa_on_gamma
    scale = np.ones(mesh.element_faces.shape)
    in2 = mesh.subdomain == 2
    scale[in2] = kappa_face[mesh.element_faces[in2]]
    return scale


@dataclass(frozen=True)
class ReducedSystem:
    K: sps.csr_matrix
    t: np.ndarray
    dofmap: DofMap
    scale: np.ndarray
    kappa: np.ndarray
    sigma: np.ndarray


def assemble_reduced(
    mesh: Mesh, spec: ProblemSpec, condensed: CondensedElement | None = None
) -> ReducedSystem:
    if condensed is None:
        condensed = element_system(mesh, spec).condensed
    if condensed.L.shape[0] != mesh.num_elements:
        raise ValueError(
            f"need condensed data for {mesh.num_elements} elements, "
            f"got {condensed.L.shape[0]}"
        )
    dof = number_unknowns(mesh, spec)
    _, kappa, sigma = sample_interface(spec, mesh)
    bd = sample_boundary(spec, mesh)
    scale = trace_scaling(mesh, kappa)
    areas = mesh.face_areas
    n = dof.count

    idx = dof.index[mesh.element_faces]
    rows = np.broadcast_to(idx[:, :, None], condensed.L.shape).ravel()
    cols = np.broadcast_to(idx[:, None, :], condensed.L.shape).ravel()
    vals = (condensed.L * scale[:, None, :]).ravel()
    t = -np.bincount(idx.ravel(), weights=condensed.b.ravel(), minlength=n)

    gamma = dof.index[mesh.gamma_faces]
    t[gamma] -= sigma * areas[mesh.gamma_faces]

    fidx = dof.index[bd.faces]
    robin = bd.kind == BoundaryData.ROBIN
    neumann = bd.kind == BoundaryData.NEUMANN
    t[fidx[robin]] -= bd.value[robin] * areas[bd.faces[robin]]
    t[fidx[neumann]] += bd.value[neumann] * areas[bd.faces[neumann]]
    diag_rows = [fidx[robin]]
    diag_vals = [-bd.alpha[robin] * areas[bd.faces[robin]]]

    fixed = ~dof.free
    keep = ~fixed[rows]
    fixed_rows = np.flatnonzero(fixed)
    diag_rows.append(fixed_rows)
    diag_vals.append(np.ones(fixed_rows.size))
    t[fixed_rows] = dof.fixed_value[fixed_rows]

    r = np.concatenate([rows[keep]] + diag_rows)
    c = np.concatenate([cols[keep]] + diag_rows)
    v = np.concatenate([vals[keep]] + diag_vals)
    K = sps.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return ReducedSystem(K=K, t=t, dofmap=dof, scale=scale, kappa=kappa, sigma=sigma)


@dataclass(frozen=True)
class FaceSolution:
    """Solution of the reduced system, expanded on the interface.

    ``values`` holds one entry per unknown (û off the interface, lambda on
    it). ``uhat1``/``uhat2`` are the one-sided traces on the interface faces
    listed in ``gamma_faces``.
    """

    values: np.ndarray
    dofmap: DofMap
    gamma_faces: np.ndarray
    kappa: np.ndarray
    sigma: np.ndarray
    scale: np.ndarray
    residual: float

    @property
    def lam(self) -> np.ndarray:
        return self.values[self.dofmap.index[self.gamma_faces]]

    @property
    def uhat1(self) -> np.ndarray:
        return self.lam

    @property
    def uhat2(self) -> np.ndarray:
        return self.kappa * self.lam

    def element_traces(self, mesh: Mesh) -> np.ndarray:
        """(NE, 4) trace values seen by each element on its faces."""
        return self.values[self.dofmap.index[mesh.element_faces]] * self.scale


def _first_empty_row(K) -> int | None:
    nnz = np.diff(K.indptr)
    empty = np.flatnonzero(nnz == 0)
    if empty.size:
        return int(empty[0])
    absrow = abs(K).sum(axis=1).A1
    zero = np.flatnonzero(absrow == 0)
    return int(zero[0]) if zero.size else None


def solve_sparse(K, t, direct_limit: int = DIRECT_SOLVER_LIMIT) -> tuple[np.ndarray, float]:
    """Solve K x = t; return x and the relative residual."""
    K = sps.csc_matrix(K)
    n = K.shape[0]
    tnorm = np.linalg.norm(t)
    denom = tnorm if tnorm > 0 else 1.0
    if n <= direct_limit:
        t = np.asarray(t, dtype=float)
        x = None
        try:
            # diagonal pivots on a symmetric ordering: far less fill; the
            # residual check below decides whether to fall back
            lu = spla.splu(
                K,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options=dict(SymmetricMode=True),
            )
            x = lu.solve(t)
            if not (np.all(np.isfinite(x)) and np.linalg.norm(K @ x - t) <= 1e-2 * RESIDUAL_TOL * denom):
                x = None
        except RuntimeError:
            x = None
        if x is None:
            log.debug("falling back to partial pivoting")
            try:
                x = spla.splu(K, permc_spec="MMD_AT_PLUS_A").solve(t)
            except RuntimeError as exc:
                raise SingularSystemError(_first_empty_row(sps.csr_matrix(K))) from exc
    else:
        ilu = spla.spilu(K, drop_tol=1e-5, fill_factor=20)
        prec = spla.LinearOperator(K.shape, ilu.solve)
        x, info = spla.bicgstab(K, t, rtol=1e-13, atol=0.0, maxiter=2000, M=prec)
        if info != 0:
            raise SolverError(f"BiCGStab did not converge (info={info})")
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(_first_empty_row(sps.csr_matrix(K)))
    res = np.linalg.norm(K @ x - t) / denom
    if res > RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    log.debug("solved %d unknowns, relative residual %.2e", n, res)
    return x, res


def solve(system: ReducedSystem, mesh: Mesh | None = None) -> FaceSolution:
    x, res = solve_sparse(system.K, system.t)
    gamma = np.flatnonzero(system.dofmap.kind == UnknownKind.LAMBDA)
    return FaceSolution(
        values=x,
        dofmap=system.dofmap,
        gamma_faces=gamma if mesh is None else mesh.gamma_faces,
        kappa=system.kappa,
        sigma=system.sigma,
        scale=system.scale,
        residual=res,
    )


def write_matrix_market(path_stem, system: ReducedSystem) -> None:
    """Write K and t as ``<stem>_K.mtx`` and ``<stem>_t.mtx``."""
    from scipy.io import mmwrite

    mmwrite(f"{path_stem}_K.mtx", system.K)
    mmwrite(f"{path_stem}_t.mtx", system.t[:, None])


# ---------------------------------------------------------------------------
# Un-condensed block system (validation only)


@dataclass(frozen=True)
class FullBlockSolution:
    """All unknowns of the un-condensed system.

    ``uhat`` has one value per face (the Omega_1 trace on interface faces);
    the interface arrays follow ``mesh.gamma_faces``.
    """

    flux: np.ndarray
    u: np.ndarray
    uhat: np.ndarray
    uhat2: np.ndarray
    j1: np.ndarray
    j2: np.ndarray
    lam: np.ndarray
    matrix: sps.csr_matrix
    rhs: np.ndarray


def solve_full_block(
    mesh: Mesh, spec: ProblemSpec, system: ElementSystem | None = None
) -> FullBlockSolution:
    """Assemble and directly solve the block system in
    (J, u, û_1/û_2, j_1, j_2, lambda) without any elimination."""
    ne, nf = mesh.num_elements, mesh.num_faces
    if ne > FULL_BLOCK_MAX_ELEMENTS:
        raise ValueError(
            f"full block oracle limited to {FULL_BLOCK_MAX_ELEMENTS} elements, got {ne}"
        )
    if system is None:
        system = element_system(mesh, spec)
    loc = system.local
    gamma, kappa, sigma = sample_interface(spec, mesh)
    ng = gamma.size
    gpos = -np.ones(nf, dtype=int)
    gpos[gamma] = np.arange(ng)
    areas = mesh.face_areas
    bd = sample_boundary(spec, mesh)

    oJ, ou, oh = 0, 4 * ne, 5 * ne
    oh2 = oh + nf
    oj1, oj2, ol = oh2 + ng, oh2 + 2 * ng, oh2 + 3 * ng
    n = ol + ng

    R, C, V = [], [], []
    rhs = np.zeros(n)

    def add(r, c, v):
        r, c, v = np.broadcast_arrays(np.asarray(r), np.asarray(c), np.asarray(v, dtype=float))
        R.append(r.ravel())
        C.append(c.ravel())
        V.append(v.ravel())

    e = np.arange(ne)
    jd = oJ + 4 * e[:, None] + np.arange(4)  # (NE, 4) flux dof ids
    # constitutive rows: A Phi + N u + û = 0
    add(jd[:, :, None], jd[:, None, :], loc.A)
    add(jd, (ou + e)[:, None], loc.N)
    faces = mesh.element_faces
    on_gamma2 = (gpos[faces] >= 0) & (mesh.subdomain[:, None] == 2)
    hat_col = np.where(on_gamma2, oh2 + gpos[faces], oh + faces)
    add(jd, hat_col, 1.0)
    # balance rows: P Phi + R u = g|K|
    add((ou + e)[:, None], jd, loc.P)
    add(ou + e, ou + e, loc.R)
    rhs[ou + e] = loc.rhs

    # face rows: sum of outward fluxes, one row per trace slot
    face_row = np.where(on_gamma2, oh2 + gpos[faces], oh + faces)
    dirichlet = bd.faces[bd.kind == BoundaryData.DIRICHLET]
    is_dir = np.zeros(nf, dtype=bool)
    is_dir[dirichlet] = True
    keep = ~is_dir[faces]
    add(face_row[keep], jd[keep], 1.0)

    rob = bd.kind == BoundaryData.ROBIN
    add(oh + bd.faces[rob], oh + bd.faces[rob], -bd.alpha[rob] * areas[bd.faces[rob]])
    rhs[oh + bd.faces[rob]] = -bd.value[rob] * areas[bd.faces[rob]]
    neu = bd.kind == BoundaryData.NEUMANN
    rhs[oh + bd.faces[neu]] = bd.value[neu] * areas[bd.faces[neu]]
    dmask = bd.kind == BoundaryData.DIRICHLET
    add(oh + bd.faces[dmask], oh + bd.faces[dmask], 1.0)
    rhs[oh + bd.faces[dmask]] = bd.value[dmask]

    gi = np.arange(ng)
    ga = areas[gamma]
    # flux multipliers: Phi_i - |F| j_i = 0 (added to the face rows above)
    add(oh + gamma, oj1 + gi, -ga)
    add(oh2 + gi, oj2 + gi, -ga)
    # segregation: |F| û_1 - |F| lambda = 0, |F| û_2 - kappa |F| lambda = 0
    add(oj1 + gi, oh + gamma, ga)
    add(oj1 + gi, ol + gi, -ga)
    add(oj2 + gi, oh2 + gi, ga)
    add(oj2 + gi, ol + gi, -kappa * ga)
    # flux balance: |F| (j_1 + j_2) = -sigma |F|
    add(ol + gi, oj1 + gi, ga)
    add(ol + gi, oj2 + gi, ga)
    rhs[ol + gi] = -sigma * ga

    A = sps.coo_matrix(
        (np.concatenate(V), (np.concatenate(R), np.concatenate(C))), shape=(n, n)
    ).tocsr()
    x = spla.spsolve(A.tocsc(), rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError()
    return FullBlockSolution(
        flux=x[jd],
        u=x[ou : ou + ne],
        uhat=x[oh : oh + nf],
        uhat2=x[oh2 : oh2 + ng],
        j1=x[oj1 : oj1 + ng],
        j2=x[oj2 : oj2 + ng],
        lam=x[ol : ol + ng],
        matrix=A,
        rhs=rhs,
    )
