"""Structured tetrahedral meshes of the unit cube split by the plane z = 0.5.

Each of the n**3 cubes is cut into six tetrahedra sharing the main diagonal
(Kuhn subdivision). The same split is used in every cube, so the partition is
conforming and the interface plane is a union of mesh faces whenever n is even.

Local conventions: local face ``i`` of an element is the face opposite local
vertex ``i``. Faces store their vertex ids sorted ascending; the global face
normal is ``(x_b - x_a) x (x_c - x_a)`` normalised, for sorted ids
``a < b < c``. ``element_face_signs[k, i]`` is +1 when the outward normal of
element ``k`` on its face ``i`` agrees with that global normal.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

INTERFACE_Z = 0.5

# Pairs of local vertices spanning the six edges of a tetrahedron.
EDGE_PAIRS = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


class FaceClass(enum.IntEnum):
    INTERIOR1 = 0
    INTERIOR2 = 1
    SIGMA1 = 2
    SIGMA2 = 3
    GAMMA = 4


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class ElementGeometry:
    """Geometry of one tetrahedron, or of a stack of them.

    All arrays may carry leading batch axes; the trailing axes are as listed.

    Attributes
    ----------
    vertices : (..., 4, 3)
    volume : (...)
    face_areas : (..., 4)
        Area of the face opposite each vertex.
    normals : (..., 4, 3)
        Outward unit normals, same ordering as ``face_areas``.
    barycenter : (..., 3)
    edges : (..., 6, 3)
        Edge vectors ``x_j - x_i`` for the pairs in ``EDGE_PAIRS``.
    """

    vertices: np.ndarray
    volume: np.ndarray
    face_areas: np.ndarray
    normals: np.ndarray
    barycenter: np.ndarray
    edges: np.ndarray

    @property
    def diameter(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=-1).max(axis=-1)

    def __getitem__(self, idx) -> "ElementGeometry":
        return ElementGeometry(
            self.vertices[idx],
            self.volume[idx],
            self.face_areas[idx],
            self.normals[idx],
            self.barycenter[idx],
            self.edges[idx],
        )


def tetra_geometry(vertices) -> ElementGeometry:
    """Compute volumes, face areas, outward normals etc. for tetrahedra.

    ``vertices`` has shape (..., 4, 3). Vertex ordering may be arbitrary; the
    returned volume is always the absolute value.
    """
    x = np.asarray(vertices, dtype=float)
    d = x[..., 1:, :] - x[..., :1, :]
    volume = np.abs(np.linalg.det(d)) / 6.0

    normals = np.empty_like(x)
    areas = np.empty(x.shape[:-1])
    for i in range(4):
        a, b, c = (j for j in range(4) if j != i)
        nrm = np.cross(x[..., b, :] - x[..., a, :], x[..., c, :] - x[..., a, :])
        twice_area = np.linalg.norm(nrm, axis=-1)
        # flip towards the side away from the opposite vertex
        side = np.einsum("...k,...k->...", nrm, x[..., i, :] - x[..., a, :])
        nrm = np.where((side > 0)[..., None], -nrm, nrm)
        normals[..., i, :] = nrm / twice_area[..., None]
        areas[..., i] = 0.5 * twice_area

    edges = x[..., EDGE_PAIRS[:, 1], :] - x[..., EDGE_PAIRS[:, 0], :]
    return ElementGeometry(
        vertices=x,
        volume=volume,
        face_areas=areas,
        normals=normals,
        barycenter=x.mean(axis=-2),
        edges=edges,
    )


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming tetrahedral mesh of the unit cube with interface z = 0.5.

    Attributes
    ----------
    n : int
        Cubes per axis.
    vertices : (NV, 3) float
    elements : (NE, 4) int
        Vertex ids, positively oriented.
    subdomain : (NE,) int
        1 for elements in z <= 0.5, 2 otherwise.
    element_faces : (NE, 4) int
        Global id of the face opposite each local vertex.
    element_face_signs : (NE, 4) int
        +1 where the element's outward normal matches the global face normal.
    faces : (NF, 3) int
        Sorted vertex ids.
    face_class : (NF,) int
        ``FaceClass`` codes.
    face_elements : (NF, 2) int
        Adjacent elements, lower id first; -1 marks a missing neighbour.
    """

    n: int
    vertices: np.ndarray
    elements: np.ndarray
    subdomain: np.ndarray
    element_faces: np.ndarray
    element_face_signs: np.ndarray
    faces: np.ndarray
    face_class: np.ndarray
    face_elements: np.ndarray

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    @cached_property
    def geometry(self) -> ElementGeometry:
        """Batched geometry of every element."""
        return tetra_geometry(self.vertices[self.elements])

    @cached_property
    def face_areas(self) -> np.ndarray:
        return _frozen(0.5 * np.linalg.norm(self._face_cross, axis=1))

    @cached_property
    def face_normals(self) -> np.ndarray:
        c = self._face_cross
        return _frozen(c / np.linalg.norm(c, axis=1)[:, None])

    @cached_property
    def face_barycenters(self) -> np.ndarray:
        return _frozen(self.vertices[self.faces].mean(axis=1))

    @cached_property
    def _face_cross(self) -> np.ndarray:
        x = self.vertices[self.faces]
        return np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0])

    def faces_of_class(self, *classes: FaceClass) -> np.ndarray:
        return np.flatnonzero(np.isin(self.face_class, [int(c) for c in classes]))

    @property
    def gamma_faces(self) -> np.ndarray:
        return self.faces_of_class(FaceClass.GAMMA)

    @property
    def boundary_faces(self) -> np.ndarray:
        return self.faces_of_class(FaceClass.SIGMA1, FaceClass.SIGMA2)


def build_cube_mesh(n: int) -> Mesh:
    """Kuhn-subdivided n x n x n mesh of the unit cube.

    ``n`` must be even so that z = 0.5 is a grid plane and the interface is
    resolved by mesh faces.
    """
    if int(n) != n or n < 2:
        raise MeshError(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    if n % 2:
        raise MeshError(
            f"n = {n} is odd: the plane z = 0.5 would cut through elements "
            "and the interface would not be conforming"
        )

    g = np.linspace(0.0, 1.0, n + 1)
    zz, yy, xx = np.meshgrid(g, g, g, indexing="ij")
    vertices = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    def vid(i, j, k):
        return i + (n + 1) * (j + (n + 1) * k)

    k, j, i = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()

    tets = []
    for perm in itertools.permutations(range(3)):
        corner = np.zeros(3, dtype=int)
        path = [corner.copy()]
        for axis in perm:
            corner[axis] = 1
            path.append(corner.copy())
        tets.append(np.column_stack([vid(i + p[0], j + p[1], k + p[2]) for p in path]))
    # element id = 6 * cube id + permutation index
    elements = np.stack(tets, axis=1).reshape(-1, 4)

    x = vertices[elements]
    det = np.linalg.det(x[:, 1:] - x[:, :1])
    neg = det < 0
    elements[neg, 2], elements[neg, 3] = elements[neg, 3], elements[neg, 2].copy()

    zc = vertices[elements][:, :, 2].mean(axis=1)
    subdomain = np.where(zc < INTERFACE_Z, 1, 2)

    local = np.array([[j for j in range(4) if j != i] for i in range(4)])
    all_faces = np.sort(elements[:, local], axis=2).reshape(-1, 3)
    faces, inverse = np.unique(all_faces, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    element_faces = inverse.reshape(-1, 4)

    nf = faces.shape[0]
    counts = np.bincount(inverse, minlength=nf)
    owner = np.repeat(np.arange(elements.shape[0]), 4)
    order = np.argsort(inverse, kind="stable")
    face_elements = -np.ones((nf, 2), dtype=int)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    face_elements[:, 0] = owner[order[starts]]
    two = counts == 2
    face_elements[two, 1] = owner[order[starts[two] + 1]]

    fz = vertices[faces][:, :, 2]
    on_plane = np.all(np.abs(fz - INTERFACE_Z) < 1e-12, axis=1)
    sub0 = subdomain[face_elements[:, 0]]
    face_class = np.where(
        counts == 1,
        np.where(sub0 == 1, FaceClass.SIGMA1, FaceClass.SIGMA2),
        np.where(sub0 == 1, FaceClass.INTERIOR1, FaceClass.INTERIOR2),
    )
    face_class[two & on_plane] = FaceClass.GAMMA

    geo = tetra_geometry(vertices[elements])
    xf = vertices[faces]
    gnormal = np.cross(xf[:, 1] - xf[:, 0], xf[:, 2] - xf[:, 0])
    dots = np.einsum("eik,eik->ei", geo.normals, gnormal[element_faces])
    signs = np.where(dots > 0, 1, -1)

    return Mesh(
        n=n,
        vertices=_frozen(vertices),
        elements=_frozen(elements),
        subdomain=_frozen(subdomain),
        element_faces=_frozen(element_faces),
        element_face_signs=_frozen(signs),
        faces=_frozen(faces),
        face_class=_frozen(face_class.astype(int)),
        face_elements=_frozen(face_elements),
    )


def element_geometry(mesh: Mesh, element_id: int) -> ElementGeometry:
    if not 0 <= element_id < mesh.num_elements:
        raise IndexError(f"element id {element_id} out of range")
    return mesh.geometry[element_id]


def mesh_size(mesh: Mesh) -> float:
    """h = max element diameter."""
    return float(mesh.geometry.diameter.max())


def write_vtk(path, mesh: Mesh, cell_scalars=None, cell_vectors=None) -> None:
    """Write the mesh as a legacy ASCII VTK unstructured grid.

    ``cell_scalars`` / ``cell_vectors`` map names to (NE,) / (NE, 3) arrays.
    The subdomain label is always written.
    """
    ne = mesh.num_elements
    lines = [
        "# vtk DataFile Version 3.0",
        f"dmhfem mesh n={mesh.n}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.vertices.shape[0]} double",
    ]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines.append(f"CELLS {ne} {5 * ne}")
    lines += [f"4 {a} {b} {c} {d}" for a, b, c, d in mesh.elements]
    lines.append(f"CELL_TYPES {ne}")
    lines += ["10"] * ne
    lines.append(f"CELL_DATA {ne}")
    lines += ["SCALARS subdomain int 1", "LOOKUP_TABLE default"]
    lines += [str(s) for s in mesh.subdomain]
    for name, values in (cell_scalars or {}).items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in np.asarray(values)]
    for name, values in (cell_vectors or {}).items():
        lines.append(f"VECTORS {name} double")
        lines += [f"{a:.17g} {b:.17g} {c:.17g}" for a, b, c in np.asarray(values)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
