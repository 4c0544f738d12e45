"""Conforming simplicial meshes of the unit square and unit cube.

Vertices and cells are numbered lexicographically by grid coordinates so that
repeated builds are bit-identical.  Every cell stores an affine map
T_K(xhat) = B_K xhat + b_K from the reference simplex with det B_K > 0; full
face connectivity (adjacency, global normals, orientation signs) is built on
construction.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MeshIntegrityError

#: local vertex indices of the face opposite vertex i, increasing order
_FACE_LOCAL_VERTICES = {
    2: np.array([[1, 2], [0, 2], [0, 1]]),
    3: np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]),
}


def _reference_outward_normals(dim):
    """Unit outward normals of the reference simplex, row i for face i."""
    n = np.zeros((dim + 1, dim))
    n[0] = 1.0 / np.sqrt(dim)
    for i in range(1, dim + 1):
        n[i, i - 1] = -1.0
    return n


@dataclass(frozen=True)
class Face:
    """A (d-1)-face of the mesh with adjacency and a fixed global normal."""

    vertex_ids: tuple
    adjacent_cells: tuple
    global_normal: np.ndarray
    diameter: float
    is_boundary: bool


@dataclass(frozen=True)
class CellGeometry:
    """Affine map data of one cell: T_K(xhat) = B_K xhat + b_K."""

    B: np.ndarray
    b: np.ndarray
    det_B: float
    B_inv: np.ndarray

    @property
    def dim(self):
        return self.b.shape[0]

    def map_points(self, xhat):
        return np.asarray(xhat, dtype=float) @ self.B.T + self.b

    def vertices(self):
        """Physical vertices of the cell in stored order."""
        v = np.vstack([np.zeros(self.dim), np.eye(self.dim)])
        return self.map_points(v)


class SimplicialMesh:
    """Immutable conforming simplicial mesh with full face connectivity.

    Attributes
    ----------
    dim : int
    vertices : (n_vertices, dim) float array
    cells : (n_cells, dim+1) int array, positively oriented
    cell_faces : (n_cells, dim+1) int array; entry i is the global index of
        the face opposite local vertex i
    cell_face_signs : (n_cells, dim+1) int array; +1 iff the face's global
        normal is outward for this cell
    h : float, maximum cell diameter
    """

    def __init__(self, vertices, cells):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise ValueError("vertices must have shape (n, 2) or (n, 3)")
        dim = vertices.shape[1]
        if cells.ndim != 2 or cells.shape[1] != dim + 1:
            raise ValueError(f"cells must have shape (n, {dim + 1})")
        self.dim = dim
        self.vertices = vertices
        self.cells = cells

        # affine maps
        v = vertices[cells]  # (nc, d+1, d)
        self.b = v[:, 0, :].copy()
        self.B = (v[:, 1:, :] - v[:, :1, :]).transpose(0, 2, 1)  # columns v_i - v_0
        self.det_B = np.linalg.det(self.B)
        if np.any(self.det_B <= 0):
            bad = int(np.argmax(self.det_B <= 0))
            raise MeshIntegrityError(
                f"cell {bad} has non-positive Jacobian determinant {self.det_B[bad]:.3e}"
            )
        self.B_inv = np.linalg.inv(self.B)
        self.cell_measures = self.det_B / {2: 2.0, 3: 6.0}[dim]

        diffs = v[:, :, None, :] - v[:, None, :, :]
        self.cell_diameters = np.sqrt((diffs**2).sum(-1)).max(axis=(1, 2))
        self.h = float(self.cell_diameters.max())

        self._build_faces(v)
        self._faces_list = None

    # ------------------------------------------------------------------
    def _build_faces(self, v):
        dim, cells = self.dim, self.cells
        nc = cells.shape[0]
        local = _FACE_LOCAL_VERTICES[dim]
        # (nc*(d+1), d) sorted global vertex tuples of every face incidence
        incid = np.sort(cells[:, local].reshape(-1, dim), axis=1)
        face_vertices, inverse = np.unique(incid, axis=0, return_inverse=True)
        nf = face_vertices.shape[0]
        self.n_faces = nf
        self.face_vertices = face_vertices
        self.cell_faces = inverse.reshape(nc, dim + 1)

        # adjacency: cells referencing each face, lower index first
        counts = np.bincount(inverse, minlength=nf)
        if counts.max() > 2:
            raise MeshIntegrityError("a face is shared by more than two cells")
        order = np.argsort(inverse, kind="stable")
        owner_cell = order // (dim + 1)
        face_cells = np.full((nf, 2), -1, dtype=np.int64)
        starts = np.zeros(nf + 1, dtype=np.int64)
        np.cumsum(counts, out=starts[1:])
        first = owner_cell[starts[:-1]]
        face_cells[:, 0] = first
        has_two = counts == 2
        second = owner_cell[starts[:-1][has_two] + 1]
        # stable argsort of `inverse` keeps cell order, so first < second
        face_cells[has_two, 1] = second
        self.face_cells = face_cells
        self.face_is_boundary = ~has_two

        # outward unit normals per (cell, local face): B^{-T} nhat, normalized
        nhat = _reference_outward_normals(dim)
        outw = np.einsum("cba,ib->cia", self.B_inv, nhat)
        outw /= np.linalg.norm(outw, axis=2, keepdims=True)
        self.cell_outward_normals = outw

        # global normal = outward normal of the lower-indexed adjacent cell
        owner = face_cells[:, 0]
        owner_local = np.argmax(self.cell_faces[owner] == np.arange(nf)[:, None], axis=1)
        self.face_normals = outw[owner, owner_local]
        self.cell_face_signs = np.where(
            face_cells[self.cell_faces, 0] == np.arange(nc)[:, None], 1, -1
        ).astype(np.int64)

        fv = self.vertices[face_vertices]  # (nf, d, d)
        fdiffs = fv[:, :, None, :] - fv[:, None, :, :]
        self.face_diameters = np.sqrt((fdiffs**2).sum(-1)).max(axis=(1, 2))
        if dim == 2:
            self.face_measures = np.linalg.norm(fv[:, 1] - fv[:, 0], axis=1)
        else:
            cross = np.cross(fv[:, 1] - fv[:, 0], fv[:, 2] - fv[:, 0])
            self.face_measures = 0.5 * np.linalg.norm(cross, axis=1)

        self._cache = {}

    # ------------------------------------------------------------------
    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    @property
    def faces(self):
        """Face records as a list (built lazily; the arrays are primary)."""
        if self._faces_list is None:
            self._faces_list = [
                Face(
                    vertex_ids=tuple(self.face_vertices[f]),
                    adjacent_cells=tuple(c for c in self.face_cells[f] if c >= 0),
                    global_normal=self.face_normals[f],
                    diameter=float(self.face_diameters[f]),
                    is_boundary=bool(self.face_is_boundary[f]),
                )
                for f in range(self.n_faces)
            ]
        return self._faces_list

    def map_points(self, cell, xhat):
        """Map reference points (n, d) to physical coordinates of one cell."""
        xhat = np.asarray(xhat, dtype=float)
        return xhat @ self.B[cell].T + self.b[cell]

    def map_points_all(self, xhat):
        """Map reference points onto every cell at once: (n_cells, n, d)."""
        xhat = np.asarray(xhat, dtype=float)
        return np.einsum("cij,qj->cqi", self.B, xhat) + self.b[:, None, :]

    def reference_coords(self, cells, x):
        """Pull physical points back to reference coordinates, batched.

        cells: (k,) cell indices; x: (k, n, d) physical points.
        """
        return np.einsum("cij,cqj->cqi", self.B_inv[cells], x - self.b[cells, None, :])


def cell_geometry(mesh, cell):
    """Affine geometry of one cell; validates the index and orientation."""
    cell = int(cell)
    if not 0 <= cell < mesh.n_cells:
        raise ValueError(f"cell index {cell} out of range [0, {mesh.n_cells})")
    det = float(mesh.det_B[cell])
    if det <= 0:
        raise MeshIntegrityError(f"cell {cell} has non-positive determinant {det:.3e}")
    return CellGeometry(
        B=mesh.B[cell].copy(),
        b=mesh.b[cell].copy(),
        det_B=det,
        B_inv=mesh.B_inv[cell].copy(),
    )


def reference_cell_geometry(dim):
    """Geometry of the reference simplex itself (identity map)."""
    return CellGeometry(B=np.eye(dim), b=np.zeros(dim), det_B=1.0, B_inv=np.eye(dim))


def reference_simplex_mesh(dim):
    """One-cell mesh consisting of the reference simplex."""
    verts = np.vstack([np.zeros(dim), np.eye(dim)])
    return SimplicialMesh(verts, np.arange(dim + 1).reshape(1, -1))


def mesh_from_cell_geometry(geom):
    """One-cell mesh of the physical cell described by ``geom``."""
    return SimplicialMesh(geom.vertices(), np.arange(geom.dim + 1).reshape(1, -1))


def build_unit_square_mesh(M):
    """Uniform triangulation of the unit square, M subdivisions per side.

    Each grid square is split along its lower-left to upper-right diagonal,
    giving 2 M^2 positively oriented triangles and mesh size sqrt(2)/M.
    """
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    M = int(M)
    s = np.linspace(0.0, 1.0, M + 1)
    X, Y = np.meshgrid(s, s, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])  # index = i + j*(M+1)

    i, j = np.meshgrid(np.arange(M), np.arange(M), indexing="xy")
    a = (i + j * (M + 1)).ravel()
    b = a + 1
    c = a + M + 2
    d = a + M + 1
    cells = np.empty((2 * M * M, 3), dtype=np.int64)
    cells[0::2] = np.column_stack([a, b, c])
    cells[1::2] = np.column_stack([a, c, d])
    return SimplicialMesh(vertices, cells)


# permutations of (x, y, z) in lexicographic order; tet k of the Kuhn
# subdivision follows the axis path of permutation k
_KUHN_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def _perm_sign(p):
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def build_unit_cube_mesh(M):
    """Kuhn triangulation of the unit cube, M subdivisions per side.

    Every subcube is cut into the same 6 tetrahedra sharing its main
    diagonal, so the global mesh is conforming; mesh size is sqrt(3)/M.
    """
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    M = int(M)
    s = np.linspace(0.0, 1.0, M + 1)
    # vertex index = i + j*(M+1) + k*(M+1)^2: axis order (k, j, i) in C layout
    Z3, Y3, X3 = np.meshgrid(s, s, s, indexing="ij")
    vertices = np.column_stack([X3.ravel(), Y3.ravel(), Z3.ravel()])

    # cube index = i + j*M + k*M^2
    K3, J3, I3 = np.meshgrid(np.arange(M), np.arange(M), np.arange(M), indexing="ij")
    corner = np.column_stack([I3.ravel(), J3.ravel(), K3.ravel()])
    strides = np.array([1, M + 1, (M + 1) ** 2], dtype=np.int64)

    cells = np.empty((6 * M**3, 4), dtype=np.int64)
    for t, perm in enumerate(_KUHN_PERMS):
        path = np.zeros((4, 3), dtype=np.int64)
        for step, axis in enumerate(perm):
            path[step + 1] = path[step]
            path[step + 1, axis] += 1
        verts4 = (corner[:, None, :] + path[None, :, :]) @ strides  # (ncubes, 4)
        if _perm_sign(perm) < 0:
            verts4 = verts4[:, [0, 1, 3, 2]]
        cells[t::6] = verts4
    return SimplicialMesh(vertices, cells)
