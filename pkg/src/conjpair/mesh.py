"""
Tetrahedral meshes of the model domains and P1 geometric primitives.

Two domains are available: the unit cube (0,1)^3 and the unit ball centred at
the origin. Both start from a structured grid of voxels, each voxel split into
six tetrahedra along its main diagonal (Kuhn subdivision). The ball is obtained
by moving the nodes of a mesh of (-1,1)^3 along rays from the origin until the
outer cube shell lies on the unit sphere.

Everything downstream works with piecewise-linear fields, whose gradients are
constant per element. The per-element basis gradients and volumes are
computed once and cached on the mesh.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, InvalidParameterError


class Domain(str, enum.Enum):
    CUBE = "cube"
    BALL = "ball"


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable tetrahedral mesh.

    Attributes
    ----------
    vertices : (N, 3) float array
    tets : (M, 4) int array, each row positively oriented
    faces : (F, 3) int array of boundary triangles
    face_tet : (F,) parent tetrahedron of each boundary face
    normals : (F, 3) outward unit normals
    areas : (F,) face areas
    domain : Domain
    """

    vertices: np.ndarray
    tets: np.ndarray
    faces: np.ndarray
    face_tet: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    domain: Domain
    level: int = field(default=0)

    def __post_init__(self):
        for arr in (self.vertices, self.tets, self.faces, self.face_tet, self.normals, self.areas):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_tets(self) -> int:
        return self.tets.shape[0]

    @cached_property
    def _geometry(self):
        p = self.vertices[self.tets]
        jac = p[:, 1:, :] - p[:, :1, :]
        det = np.linalg.det(jac)
        # columns of inv(jac) are the gradients of barycentric coords 1..3
        inv = np.linalg.inv(jac)
        g = np.empty((self.n_tets, 4, 3))
        g[:, 1:, :] = np.transpose(inv, (0, 2, 1))
        g[:, 0, :] = -g[:, 1:, :].sum(axis=1)
        g.setflags(write=False)
        vol = det / 6.0
        vol.setflags(write=False)
        return vol, g

    @property
    def volumes(self) -> np.ndarray:
        """Signed tet volumes (all positive by construction)."""
        return self._geometry[0]

    @property
    def basis_gradients(self) -> np.ndarray:
        """(M, 4, 3) gradients of the local hat functions."""
        return self._geometry[1]

    @cached_property
    def nodal_mass(self) -> np.ndarray:
        """Integral of each hat function, i.e. the lumped mass."""
        m = np.zeros(self.n_vertices)
        np.add.at(m, self.tets.ravel(), np.repeat(self.volumes / 4.0, 4))
        m.setflags(write=False)
        return m

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        b = np.unique(self.faces)
        b.setflags(write=False)
        return b

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_nodes] = False
        idx = np.flatnonzero(mask)
        idx.setflags(write=False)
        return idx

    @cached_property
    def centroids(self) -> np.ndarray:
        c = self.vertices[self.tets].mean(axis=1)
        c.setflags(write=False)
        return c

    @property
    def total_volume(self) -> float:
        return float(self.volumes.sum())

    @property
    def surface_area(self) -> float:
        return float(self.areas.sum())

    @property
    def h(self) -> float:
        """Longest edge length over the mesh."""
        p = self.vertices[self.tets]
        edges = [p[:, i] - p[:, j] for i, j in itertools.combinations(range(4), 2)]
        return float(max(np.linalg.norm(e, axis=1).max() for e in edges))

    def mean(self, values: np.ndarray) -> float:
        """Volume average of a nodal P1 field."""
        return float(self.nodal_mass @ values / self.nodal_mass.sum())

    def remove_mean(self, values: np.ndarray) -> np.ndarray:
        return values - self.mean(values)

    def coordinate(self, axis: int) -> np.ndarray:
        """Nodal values of x_axis, with axis in {1, 2, 3}."""
        return np.array(self.vertices[:, axis - 1])


def element_gradients(mesh: Mesh, values) -> np.ndarray:
    """Per-element gradient of the P1 interpolant of nodal ``values``.

    Returns an (M, 3) array. Exact for nodal samples of affine functions.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise DimensionError(
            f"field has shape {values.shape}, mesh has {mesh.n_vertices} vertices"
        )
    return np.einsum("ek,ekc->ec", values[mesh.tets], mesh.basis_gradients)


# The six Kuhn tets of the unit voxel: walk from corner (0,0,0) to (1,1,1)
# adding one unit vector at a time, in every possible axis order.
def _kuhn_local():
    tets = []
    for perm in itertools.permutations(range(3)):
        corner = np.zeros(3, dtype=int)
        path = [corner.copy()]
        for ax in perm:
            corner[ax] = 1
            path.append(corner.copy())
        tets.append(path)
    return np.array(tets)  # (6, 4, 3) voxel-local corner offsets


def _structured(n: int, lo: float, hi: float, mirrored: bool = False):
    ticks = np.linspace(lo, hi, n + 1)
    X, Y, Z = np.meshgrid(ticks, ticks, ticks, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    local = _kuhn_local()[None]
    I, J, K = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    base = np.column_stack([I.ravel(), J.ravel(), K.ravel()])  # (n^3, 3)
    if mirrored:
        # diagonal of every voxel points away from the grid centre; reflections
        # across grid planes keep the face diagonals matching
        flip = (2 * base + 1) < n
        local = np.where(flip[:, None, None, :], 1 - local, local)
    corners = base[:, None, None, :] + local  # (n^3, 6, 4, 3)
    tets = vid(corners[..., 0], corners[..., 1], corners[..., 2]).reshape(-1, 4)
    return vertices, tets


def _orient(vertices, tets):
    p = vertices[tets]
    det = np.linalg.det(p[:, 1:, :] - p[:, :1, :])
    tets = tets.copy()
    neg = det < 0
    tets[neg, 2], tets[neg, 3] = tets[neg, 3], tets[neg, 2].copy()
    return tets


def _boundary(vertices, tets):
    local_faces = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])
    all_faces = tets[:, local_faces].reshape(-1, 3)
    owner = np.repeat(np.arange(tets.shape[0]), 4)
    opposite = tets[:, [0, 1, 2, 3]].reshape(-1)
    key = np.sort(all_faces, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if counts.max() > 2:
        raise ValueError("non-manifold mesh: a face is shared by more than two tets")
    on_boundary = counts[inverse] == 1
    faces = all_faces[on_boundary]
    face_tet = owner[on_boundary]
    opp = opposite[on_boundary]

    a, b, c = (vertices[faces[:, i]] for i in range(3))
    cross = np.cross(b - a, c - a)
    area2 = np.linalg.norm(cross, axis=1)
    normals = cross / area2[:, None]
    # flip any normal that points toward the opposite vertex
    inward = np.einsum("fc,fc->f", normals, vertices[opp] - a) > 0
    normals[inward] *= -1
    faces = faces.copy()
    faces[inward, 1], faces[inward, 2] = faces[inward, 2], faces[inward, 1].copy()
    return faces, face_tet, normals, 0.5 * area2


def _finish(vertices, tets, domain, level):
    tets = _orient(vertices, tets)
    faces, face_tet, normals, areas = _boundary(vertices, tets)
    return Mesh(
        vertices=vertices,
        tets=tets,
        faces=faces,
        face_tet=face_tet,
        normals=normals,
        areas=areas,
        domain=domain,
        level=level,
    )


def build_cube_mesh(n: int) -> Mesh:
    """Kuhn-subdivided mesh of (0,1)^3 with ``n`` voxels per axis.

    Gives 6 n^3 tets and (n+1)^3 vertices.
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"cube mesh needs n >= 1, got {n!r}")
    n = int(n)
    vertices, tets = _structured(n, 0.0, 1.0)
    return _finish(vertices, tets, Domain.CUBE, n)


def build_ball_mesh(n: int) -> Mesh:
    """Mesh of the unit ball from a radially mapped cube mesh.

    The underlying cube (-1,1)^3 carries ``2 n`` voxels per axis, split with
    each voxel's diagonal pointing away from the origin so that every tet
    keeps a vertex off the boundary. A point at cube "radius"
    ``t = max|x_i|`` moves along its ray by the factor ``(t / |x|)**t``:
    the boundary shell lands on the unit sphere and the centre is left
    nearly undistorted.
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"ball mesh needs n >= 1, got {n!r}")
    n = int(n)
    vertices, tets = _structured(2 * n, -1.0, 1.0, mirrored=True)
    inf = np.abs(vertices).max(axis=1)
    two = np.linalg.norm(vertices, axis=1)
    ratio = np.divide(inf, two, out=np.ones_like(two), where=two > 0)
    vertices = vertices * (ratio**inf)[:, None]
    # re-normalise the outer shell so boundary radii are 1 to round-off
    outer = np.isclose(inf, 1.0)
    vertices[outer] /= np.linalg.norm(vertices[outer], axis=1)[:, None]
    return _finish(vertices, tets, Domain.BALL, n)


def build_mesh(domain, n: int) -> Mesh:
    domain = Domain(domain)
    if domain is Domain.CUBE:
        return build_cube_mesh(n)
    return build_ball_mesh(n)
