"""Element matrices for the lowest-order Raviart-Thomas mixed hybrid method
and their static condensation.

On an element K with vertices x_i the flux is expanded as
``J = sum_i Phi_i tau_i`` with ``tau_i(x) = (x - x_i) / (3 |K|)``; the
coefficient ``Phi_i`` is the outward flux through the face opposite x_i.
Testing the constitutive law with tau_i and the balance law with the
constant 1 gives, for the element unknowns (Phi, u) and the face traces û::

    A Phi + N u + û = 0
    P Phi + R u     = g |K|

with ``A_ij = (T^-1 tau_j, tau_i)``, ``H_i = -(T^-1 v, tau_i)``,
``P = (1, 1, 1, 1)``, ``N = H - P^T`` and ``R = r |K|``, T being the
(possibly stabilized) diffusion tensor. Eliminating u and then Phi gives the
affine map ``Phi = L û + b`` and ``u = (P A^-1 û + g|K|) / M`` with
``M = R - P A^-1 N``.

Everything here works on stacks of elements: arrays carry arbitrary leading
batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import ElementGeometry, Mesh
from .problem import PecletMode, ProblemSpec, sample_elements
from .quadrature import map_points, tet_rule
from .stabilization import StabTensor, diameter_peclet, local_peclet, stabilized_tensor

SINGULAR_TOL = 1e-14


class SingularElementError(ArithmeticError):
    def __init__(self, elements):
        self.elements = np.atleast_1d(elements)
        super().__init__(
            f"condensed element matrix M vanishes on {self.elements.size} "
            f"element(s), first index {self.elements[0]}; the reaction and "
            "advection data violate the coercivity assumption"
        )


def rt0_basis(geometry: ElementGeometry, point) -> np.ndarray:
    """The four RT0 basis vectors at ``point``: shape (..., 4, 3)."""
    x = np.asarray(point, dtype=float)
    vol = geometry.volume[..., None, None]
    return (x[..., None, :] - geometry.vertices) / (3.0 * vol)


@dataclass(frozen=True)
class LocalMatrices:
    A: np.ndarray
    H: np.ndarray
    P: np.ndarray
    N: np.ndarray
    R: np.ndarray
    rhs: np.ndarray
    volume: np.ndarray


@dataclass(frozen=True)
class CondensedElement:
    """Affine flux map ``Phi = L û + b`` and the scalar recovery data."""

    L: np.ndarray
    b: np.ndarray
    M: np.ndarray
    PAinv: np.ndarray
    rhs: np.ndarray

    def flux(self, uhat):
        return np.einsum("...ij,...j->...i", self.L, uhat) + self.b

    def scalar(self, uhat):
        return (np.einsum("...j,...j->...", self.PAinv, uhat) + self.rhs) / self.M


def _is_spd(t: np.ndarray) -> bool:
    if not np.allclose(t, np.swapaxes(t, -1, -2), rtol=1e-12, atol=0):
        return False
    try:
        np.linalg.cholesky(t)
    except np.linalg.LinAlgError:
        return False
    return True


def assemble_local(geometry: ElementGeometry, r, g, v, tensor) -> LocalMatrices:
    """Local matrices for constant coefficients on each element.

    ``tensor`` is the diffusion tensor (..., 3, 3) or a ``StabTensor``.
    The flux mass matrix is integrated with the 4-point degree-2 rule, which
    is exact since the integrand is quadratic.
    """
    if isinstance(tensor, StabTensor):
        tensor = tensor.tensor
    tensor = np.asarray(tensor, dtype=float)
    if not _is_spd(tensor):
        raise ValueError("diffusion tensor must be symmetric positive definite")
    tinv = np.linalg.inv(tensor)

    vol = geometry.volume
    bary, w = tet_rule(2)
    pts = map_points(bary, geometry.vertices)  # (..., Q, 3)
    tau = (pts[..., :, None, :] - geometry.vertices[..., None, :, :]) / (
        3.0 * vol[..., None, None, None]
    )  # (..., Q, 4, 3)
    A = vol[..., None, None] * np.einsum("q,...qik,...kl,...qjl->...ij", w, tau, tinv, tau)

    # integral of tau_j over K is (x_B - x_j) / 3
    tau_mean = (geometry.barycenter[..., None, :] - geometry.vertices) / 3.0
    H = -np.einsum("...jk,...kl,...l->...j", tau_mean, tinv, np.asarray(v, dtype=float))

    P = np.ones(vol.shape + (4,))
    r = np.broadcast_to(np.asarray(r, dtype=float), vol.shape)
    g = np.broadcast_to(np.asarray(g, dtype=float), vol.shape)
    return LocalMatrices(
        A=A, H=H, P=P, N=H - P, R=r * vol, rhs=g * vol, volume=vol
    )


def condense(local: LocalMatrices) -> CondensedElement:
    Ainv = np.linalg.inv(local.A)
    PAinv = np.einsum("...i,...ij->...j", local.P, Ainv)
    AinvN = np.einsum("...ij,...j->...i", Ainv, local.N)
    PAinvPt = PAinv.sum(axis=-1)
    M = local.R - np.einsum("...i,...i->...", local.P, AinvN)

    scale = np.abs(local.R) + np.abs(PAinvPt)
    bad = np.abs(M) <= SINGULAR_TOL * scale
    if np.any(bad):
        raise SingularElementError(np.flatnonzero(np.ravel(bad)))

    # L = -A^-1 (N M^-1 P A^-1 + I),  b = -A^-1 N M^-1 g|K|
    L = -(np.einsum("...i,...j->...ij", AinvN, PAinv) / M[..., None, None] + Ainv)
    b = -AinvN * (local.rhs / M)[..., None]
    return CondensedElement(L=L, b=b, M=M, PAinv=PAinv, rhs=local.rhs)


@dataclass(frozen=True)
class ElementSystem:
    """Everything computed per element for a given mesh and problem."""

    stab: StabTensor
    local: LocalMatrices
    condensed: CondensedElement


def element_system(mesh: Mesh, spec: ProblemSpec) -> ElementSystem:
    geo = mesh.geometry
    data = sample_elements(spec, mesh)
    if spec.peclet is PecletMode.DIAMETER:
        pe = diameter_peclet(geo.diameter, data.v, data.mu)
    else:
        pe = local_peclet(geo.edges, data.v, data.mu)
    stab = stabilized_tensor(data.mu, data.v, pe, spec.stabilization)
    local = assemble_local(geo, data.r, data.g, data.v, stab)
    return ElementSystem(stab=stab, local=local, condensed=condense(local))
