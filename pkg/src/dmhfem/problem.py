"""Model data for the two-subdomain advection-diffusion-reaction problem.

Every coefficient is either a constant or a callable taking an (N, 3) array of
points and returning (N,) values (or (N, 3) for the advection field). Element
data are sampled once at the element barycenter, interface and boundary data
at the face barycenter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from .mesh import FaceClass, Mesh

Scalar = Union[float, Callable[[np.ndarray], np.ndarray]]
Vector = Union[tuple, Callable[[np.ndarray], np.ndarray]]

SIDES = ("bottom", "top", "x0", "x1", "y0", "y1")


class Stabilization(enum.Enum):
    NONE = "none"
    SG = "sg"
    UPWIND = "upwind"


class PecletMode(enum.Enum):
    """Length scale of the local Peclet number driving stabilization.

    ``EDGE``: max over edges of |v . e| / (2 mu). ``DIAMETER``: |v| h_K / (2 mu).
    """

    EDGE = "edge"
    DIAMETER = "diameter"


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Dirichlet:
    value: Scalar = 0.0


@dataclass(frozen=True)
class Neumann:
    """Prescribed outward normal flux J.n."""

    flux: Scalar = 0.0


@dataclass(frozen=True)
class Robin:
    """J.n = alpha * u - beta."""

    alpha: Scalar = 1.0
    beta: Scalar = 0.0


BoundaryCondition = Union[Dirichlet, Neumann, Robin]


@dataclass(frozen=True)
class Coefficients:
    mu: Scalar = 1.0
    r: Scalar = 0.0
    g: Scalar = 0.0
    v: Vector = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CoefficientSample:
    mu: float
    r: float
    g: float
    v: np.ndarray


def default_bcs() -> dict:
    return {
        "bottom": Dirichlet(0.0),
        "top": Dirichlet(1.0),
        "x0": Neumann(0.0),
        "x1": Neumann(0.0),
        "y0": Neumann(0.0),
        "y1": Neumann(0.0),
    }


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients per subdomain, interface data and boundary conditions.

    ``bcs`` maps each side of the cube (``bottom`` z=0, ``top`` z=1, ``x0``,
    ``x1``, ``y0``, ``y1``) to a boundary condition.
    """

    omega1: Coefficients = field(default_factory=Coefficients)
    omega2: Coefficients = field(default_factory=Coefficients)
    kappa: Scalar = 1.0
    sigma: Scalar = 0.0
    bcs: Mapping[str, BoundaryCondition] = field(default_factory=default_bcs)
    stabilization: Stabilization = Stabilization.NONE
    peclet: PecletMode = PecletMode.EDGE

    def __post_init__(self):
        object.__setattr__(self, "stabilization", Stabilization(self.stabilization))
        object.__setattr__(self, "peclet", PecletMode(self.peclet))
        missing = set(SIDES) - set(self.bcs)
        unknown = set(self.bcs) - set(SIDES)
        if missing or unknown:
            raise ProblemError(
                f"boundary conditions must cover exactly {SIDES}; "
                f"missing {sorted(missing)}, unknown {sorted(unknown)}"
            )
        for side, bc in self.bcs.items():
            if isinstance(bc, Robin) and not callable(bc.alpha) and bc.alpha <= 0:
                raise ProblemError(f"Robin alpha must be > 0 on side {side!r}")
        for c in (self.omega1, self.omega2):
            if not callable(c.mu) and c.mu <= 0:
                raise ProblemError(f"diffusivity must be positive, got {c.mu}")
        if not callable(self.kappa) and self.kappa < 0:
            raise ProblemError("kappa must be nonnegative")

    def subdomain(self, label: int) -> Coefficients:
        return self.omega1 if label == 1 else self.omega2


def evaluate(coef, points: np.ndarray, vector: bool = False) -> np.ndarray:
    """Evaluate a constant or callable coefficient at (N, 3) points."""
    points = np.atleast_2d(points)
    shape = (points.shape[0], 3) if vector else (points.shape[0],)
    if callable(coef):
        out = np.asarray(coef(points), dtype=float)
    else:
        out = np.asarray(coef, dtype=float)
    return np.broadcast_to(out, shape).astype(float)


@dataclass(frozen=True)
class ElementData:
    """Barycenter samples for all elements, as arrays."""

    mu: np.ndarray
    r: np.ndarray
    g: np.ndarray
    v: np.ndarray


def sample_elements(spec: ProblemSpec, mesh: Mesh) -> ElementData:
    xb = mesh.geometry.barycenter
    out = {k: np.empty(mesh.num_elements) for k in ("mu", "r", "g")}
    v = np.empty((mesh.num_elements, 3))
    for label in (1, 2):
        sel = mesh.subdomain == label
        c = spec.subdomain(label)
        for k in out:
            out[k][sel] = evaluate(getattr(c, k), xb[sel])
        v[sel] = evaluate(c.v, xb[sel], vector=True)
    if np.any(out["mu"] <= 0):
        raise ProblemError("diffusivity must be positive at every barycenter")
    return ElementData(v=v, **out)


def sample_element(spec: ProblemSpec, mesh: Mesh, element_id: int) -> CoefficientSample:
    xb = mesh.geometry.barycenter[element_id][None]
    c = spec.subdomain(mesh.subdomain[element_id])
    return CoefficientSample(
        mu=float(evaluate(c.mu, xb)[0]),
        r=float(evaluate(c.r, xb)[0]),
        g=float(evaluate(c.g, xb)[0]),
        v=evaluate(c.v, xb, vector=True)[0],
    )


def face_side(point) -> str:
    x, y, z = point
    tol = 1e-12
    if abs(z) < tol:
        return "bottom"
    if abs(z - 1) < tol:
        return "top"
    if abs(x) < tol:
        return "x0"
    if abs(x - 1) < tol:
        return "x1"
    if abs(y) < tol:
        return "y0"
    if abs(y - 1) < tol:
        return "y1"
    raise ProblemError(f"point {point} is not on the boundary of the unit cube")


def boundary_condition(spec: ProblemSpec, mesh: Mesh, face_id: int) -> BoundaryCondition:
    if mesh.face_class[face_id] not in (FaceClass.SIGMA1, FaceClass.SIGMA2):
        raise ProblemError(f"face {face_id} is not a boundary face")
    return spec.bcs[face_side(mesh.face_barycenters[face_id])]


@dataclass(frozen=True)
class BoundaryData:
    """Per-face boundary data for all boundary faces.

    ``kind`` is 0 for Dirichlet, 1 for Neumann, 2 for Robin. ``value`` holds
    the Dirichlet value, the Neumann flux or the Robin beta; ``alpha`` is zero
    except on Robin faces.
    """

    faces: np.ndarray
    kind: np.ndarray
    value: np.ndarray
    alpha: np.ndarray

    DIRICHLET = 0
    NEUMANN = 1
    ROBIN = 2


def sample_boundary(spec: ProblemSpec, mesh: Mesh) -> BoundaryData:
    faces = mesh.boundary_faces
    xb = mesh.face_barycenters[faces]
    sides = np.array([face_side(p) for p in xb])
    kind = np.empty(faces.size, dtype=int)
    value = np.empty(faces.size)
    alpha = np.zeros(faces.size)
    for side, bc in spec.bcs.items():
        sel = sides == side
        if not sel.any():
            continue
        if isinstance(bc, Dirichlet):
            kind[sel] = BoundaryData.DIRICHLET
            value[sel] = evaluate(bc.value, xb[sel])
        elif isinstance(bc, Neumann):
            kind[sel] = BoundaryData.NEUMANN
            value[sel] = evaluate(bc.flux, xb[sel])
        elif isinstance(bc, Robin):
            kind[sel] = BoundaryData.ROBIN
            alpha[sel] = evaluate(bc.alpha, xb[sel])
            value[sel] = evaluate(bc.beta, xb[sel])
        else:
            raise ProblemError(f"no boundary condition for side {side!r}")
    if np.any(alpha[kind == BoundaryData.ROBIN] <= 0):
        raise ProblemError("Robin alpha must be positive")
    return BoundaryData(faces=faces, kind=kind, value=value, alpha=alpha)


def sample_interface(spec: ProblemSpec, mesh: Mesh):
    """(faces, kappa, sigma) sampled at the barycenters of the Gamma faces."""
    faces = mesh.gamma_faces
    xb = mesh.face_barycenters[faces]
    kappa = evaluate(spec.kappa, xb)
    if np.any(kappa < 0):
        raise ProblemError("kappa must be nonnegative")
    return faces, kappa, evaluate(spec.sigma, xb)
