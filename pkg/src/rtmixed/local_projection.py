"""Element-local RT projection from interior and face moment data.

Given vector data p on a cell and scalar data q_i on its faces, there is a
unique RT_r function matching the interior moments of p against [P_{r-1}]^d
and the face moments of q_i against P_r(F_i).  The projection is stable:
||zeta||^2 <= C (||p||^2 + h sum_i ||q_i||^2) with C independent of the cell
size, which this module exposes as a measurable ratio.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import mesh_from_cell_geometry
from .quadrature import simplex_rule
from .spaces import DiscreteField, RtSpace, evaluate_field, face_context


@dataclass
class LocalProjectionData:
    """Projection data: interior vector field and one scalar per face.

    ``p`` maps physical points (n, d) to vectors (n, d).  ``q`` holds d+1
    callables indexed by local face (face i opposite vertex i), each mapping
    physical points to scalars; values are normal components oriented by the
    face's outward (= global, for a standalone cell) normal.
    """

    p: callable
    q: tuple

    def validate(self, dim):
        if len(self.q) != dim + 1:
            raise ValueError(f"need {dim + 1} face data entries, got {len(self.q)}")


class LocalRtProjection:
    """Projection result: a one-cell RT field evaluable at reference points."""

    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = coeffs
        self.field = DiscreteField(space, coeffs)

    def eval(self, xhat):
        """Values at reference points (nq, d)."""
        return evaluate_field(self.field, 0, xhat)

    def eval_physical(self, x):
        """Values at physical points (nq, d)."""
        a = self.space.local_coefficients(self.coeffs)
        return self.space.values_at_physical(
            np.array([0]), np.atleast_2d(np.asarray(x, dtype=float))[None], a
        )[0]


def _one_cell_space(geom, r):
    return RtSpace(mesh_from_cell_geometry(geom), r)


def local_rt_project(geom, data, r, quad_degree=None):
    """Project (p, q_i) data onto RT_r of the cell described by ``geom``.

    The returned projection matches all interior and face moments of the data
    at quadrature degree 2r+4 (overridable for rough data).
    """
    data.validate(geom.dim)
    degree = 2 * r + 4 if quad_degree is None else quad_degree
    space = _one_cell_space(geom, r)
    mesh = space.mesh

    ctx = face_context(mesh, degree)
    qvals = np.empty((mesh.n_faces, ctx.n_points))
    for i in range(geom.dim + 1):
        f = mesh.cell_faces[0, i]
        qvals[f] = np.asarray(data.q[i](ctx.phys_points[f]), dtype=float)
    face_coeffs = space.face_dof_coefficients(ctx, qvals)

    coeffs = np.zeros(space.n_dofs)
    coeffs[: space.interior_offset] = face_coeffs.ravel()
    if space.n_interior_dofs:
        rule = simplex_rule(geom.dim, degree)
        x = mesh.map_points_all(rule.points)
        pv = np.asarray(data.p(x[0]), dtype=float)[None]
        coeffs[space.interior_offset :] = space.interior_dof_coefficients(rule, pv).ravel()
    return LocalRtProjection(space, coeffs)


def local_stability_ratio(geom, data, r, quad_degree=None):
    """Stability quotient ||zeta||^2 / (||p||^2 + h sum_i ||q_i||^2).

    ``h`` is the cell diameter.  Raises ValueError for identically zero data
    (the ratio is undefined).
    """
    data.validate(geom.dim)
    degree = 2 * r + 4 if quad_degree is None else quad_degree
    proj = local_rt_project(geom, data, r, quad_degree=degree)
    mesh = proj.space.mesh
    rule = simplex_rule(geom.dim, degree)

    zeta = proj.space.cell_values(proj.coeffs, rule)[0]  # (nq, d)
    num = mesh.det_B[0] * float(rule.weights @ (zeta**2).sum(-1))

    x = mesh.map_points_all(rule.points)[0]
    pv = np.asarray(data.p(x), dtype=float)
    den = mesh.det_B[0] * float(rule.weights @ (pv**2).sum(-1))
    ctx = face_context(mesh, degree)
    h = float(mesh.cell_diameters[0])
    for i in range(geom.dim + 1):
        f = mesh.cell_faces[0, i]
        qv = np.asarray(data.q[i](ctx.phys_points[f]), dtype=float)
        den += h * ctx.jac[f] * float(ctx.weights @ qv**2)
    if den == 0.0:
        raise ValueError("zero projection data: stability ratio is undefined")
    return num / den
