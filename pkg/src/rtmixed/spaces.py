"""Raviart-Thomas H(div) spaces and discontinuous P_r spaces on simplices.

The RT local shape space on a cell K is [P_r(K)]^d + x P_r(K).  Degrees of
freedom are moments of the normal trace against polynomials on each face plus
interior moments against [P_{r-1}(K)]^d.  Face moment polynomials are an
orthonormalized Legendre-type family on the reference face, transported by the
face's global-vertex-order parametrization, so the two cells sharing a face
see identical functionals up to the orientation sign; this makes global H(div)
assembly sign-only.

Each cell's dual basis is found by solving the local moment (Vandermonde)
system over a monomial spanning set in scaled cell-local coordinates; the
solves are batched over all cells with numpy.
"""

from dataclasses import dataclass
from itertools import product
from math import comb, factorial

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import NumericalDegeneracyError, UnsupportedDegreeError
from .mesh import reference_simplex_mesh
from .quadrature import REFERENCE_MEASURE, face_rule, simplex_rule

#: (dimension, degree) pairs with element tables
SUPPORTED_DEGREES = ((2, 0), (2, 1), (2, 2), (3, 0), (3, 1))

_CHUNK = 4096


# ----------------------------------------------------------------------
# monomial utilities
# ----------------------------------------------------------------------

def monomial_exponents(dim, degree, exact=False):
    """Multi-indices with total degree <= degree (== degree if exact).

    Graded lexicographic order; empty (0, dim) array for degree < 0.
    """
    if degree < 0:
        return np.zeros((0, dim), dtype=np.int64)
    totals = [degree] if exact else range(degree + 1)
    exps = [
        e
        for total in totals
        for e in sorted(p for p in product(range(total + 1), repeat=dim) if sum(p) == total)
    ]
    return np.array(exps, dtype=np.int64).reshape(-1, dim)


def eval_monomials(exps, x):
    """Evaluate monomials x^alpha: x (..., dim) -> (..., n)."""
    x = np.asarray(x, dtype=float)
    return np.prod(x[..., None, :] ** exps, axis=-1)


def eval_monomial_derivatives(exps, x, axis):
    """d/dx_axis of each monomial at x: (..., n)."""
    x = np.asarray(x, dtype=float)
    coef = exps[:, axis].astype(float)
    dexps = exps.copy()
    dexps[:, axis] = np.maximum(dexps[:, axis] - 1, 0)
    return coef * np.prod(x[..., None, :] ** dexps, axis=-1)


# ----------------------------------------------------------------------
# reference bases
# ----------------------------------------------------------------------

class DgBasis:
    """Monomial basis of P_r on the reference simplex (first function is 1)."""

    def __init__(self, dim, r):
        self.dim = dim
        self.r = r
        self.exponents = monomial_exponents(dim, r)
        self.n_loc = self.exponents.shape[0]

    def tabulate(self, points):
        """Values at reference points: (n_loc, nq)."""
        return eval_monomials(self.exponents, points).T

    def tabulate_gradient(self, points):
        """Reference-coordinate gradients at points: (n_loc, nq, dim)."""
        cols = [eval_monomial_derivatives(self.exponents, points, a).T for a in range(self.dim)]
        return np.stack(cols, axis=-1)

    def eval_at(self, coeff_rows, points):
        """Linear combinations at points: coeff_rows (..., n_loc) -> (..., nq)."""
        return coeff_rows @ self.tabulate(points)


class FaceMomentBasis:
    """Orthonormalized polynomial moments on the reference face simplex.

    Orthonormal with respect to the measure-normalized inner product, so the
    first function is identically 1 (the RT_0 moment is the plain flux).
    """

    def __init__(self, dim, r):
        self.dim = dim
        self.r = r
        fdim = dim - 1
        self.exponents = monomial_exponents(fdim, r)
        n = self.exponents.shape[0]
        rule = face_rule(dim, 2 * r)
        vals = eval_monomials(self.exponents, rule.points)  # (nq, n)
        gram = (vals * rule.weights[:, None]).T @ vals / REFERENCE_MEASURE[fdim]
        L = cholesky(gram, lower=True)
        self.coeffs = solve_triangular(L, np.eye(n), lower=True)
        self.n_loc = n

    def tabulate(self, points):
        """Values at reference-face points: (n_loc, nq)."""
        return self.coeffs @ eval_monomials(self.exponents, points).T


class RtSpanningSet:
    """Monomial spanning set of [P_r]^d + u P_r in scaled local coordinates.

    Layout: component blocks e_c * u^alpha (|alpha| <= r) for c = 0..d-1,
    then u * u^beta for |beta| = r.
    """

    def __init__(self, dim, r):
        self.dim = dim
        self.r = r
        self.vec_exps = monomial_exponents(dim, r)
        self.hom_exps = monomial_exponents(dim, r, exact=True)
        self.n_vec = self.vec_exps.shape[0]
        self.n_hom = self.hom_exps.shape[0]
        self.n_span = dim * self.n_vec + self.n_hom

    def tabulate(self, u):
        """Vector values at scaled points u (..., d): (..., n_span, d)."""
        u = np.asarray(u, dtype=float)
        m = eval_monomials(self.vec_exps, u)
        hom = eval_monomials(self.hom_exps, u)
        out = np.zeros(u.shape[:-1] + (self.n_span, self.dim))
        for c in range(self.dim):
            out[..., c * self.n_vec : (c + 1) * self.n_vec, c] = m
        out[..., self.dim * self.n_vec :, :] = hom[..., :, None] * u[..., None, :]
        return out

    def tabulate_divergence(self, u):
        """Divergence in u-derivatives at u: (..., n_span).

        Multiply by 1/scale for the physical divergence.
        """
        u = np.asarray(u, dtype=float)
        blocks = [eval_monomial_derivatives(self.vec_exps, u, c) for c in range(self.dim)]
        hom = (self.dim + self.r) * eval_monomials(self.hom_exps, u)
        return np.concatenate(blocks + [hom], axis=-1)


def rt_local_dim(dim, r):
    """Dimension of RT_r on a d-simplex: (d+r+1)(d+r-1)!/((d-1)! r!)."""
    return (dim + r + 1) * factorial(dim + r - 1) // (factorial(dim - 1) * factorial(r))


# ----------------------------------------------------------------------
# global spaces
# ----------------------------------------------------------------------

@dataclass(eq=False)
class DiscreteField:
    """Coefficient vector over a space, optionally tagged with a time."""

    space: object
    coeffs: np.ndarray
    time_tag: float = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.n_dofs,):
            raise ValueError(
                f"coefficient vector has length {self.coeffs.shape}, space has {self.space.n_dofs} dofs"
            )


class DgSpace:
    """Discontinuous P_r space: per-cell monomial blocks, no coupling."""

    def __init__(self, mesh, r):
        if r < 0:
            raise ValueError(f"polynomial degree must be >= 0, got {r}")
        self.mesh = mesh
        self.r = r
        self.basis = DgBasis(mesh.dim, r)
        self.n_loc = self.basis.n_loc
        self.n_dofs = mesh.n_cells * self.n_loc
        self.cell_dofs = np.arange(self.n_dofs, dtype=np.int64).reshape(mesh.n_cells, self.n_loc)
        self._tab = {}

    def tabulate(self, rule):
        """Reference basis values at rule points, shared by all cells: (n_loc, nq)."""
        key = ("v", rule.degree)
        if key not in self._tab:
            self._tab[key] = self.basis.tabulate(rule.points)
        return self._tab[key]

    def tabulate_gradient(self, rule):
        key = ("g", rule.degree)
        if key not in self._tab:
            self._tab[key] = self.basis.tabulate_gradient(rule.points)
        return self._tab[key]

    def cell_values(self, coeffs, rule):
        """Field values at rule points on every cell: (n_cells, nq)."""
        return coeffs[self.cell_dofs] @ self.tabulate(rule)

    def cell_gradients(self, coeffs, rule):
        """Physical gradients at rule points on every cell: (n_cells, nq, d)."""
        ref = np.einsum("ck,kqd->cqd", coeffs[self.cell_dofs], self.tabulate_gradient(rule))
        return np.einsum("cji,cqj->cqi", self.mesh.B_inv, ref)

    def face_traces(self, coeffs, ctx):
        """Per-side traces at face quadrature points: (n_faces, 2, nqf).

        The second side is zero on boundary faces.
        """
        vals = np.empty((self.mesh.n_faces, 2, ctx.n_points))
        for side in range(2):
            tab = eval_monomials(self.basis.exponents, ctx.ref_coords[side])  # (nf, nq, n_loc)
            vals[:, side] = np.einsum("fk,fqk->fq", coeffs[self.cell_dofs[ctx.side_cells[:, side]]], tab)
        vals[ctx.boundary, 1] = 0.0
        return vals


class RtSpace:
    """Degree-r Raviart-Thomas space over a simplicial mesh.

    Global dof layout: face dofs first (face-major, n_face_dofs per face),
    then cell-interior dofs (cell-major).  ``cell_dofs``/``cell_signs`` give
    the (global index, orientation sign) pairs per cell; interior signs are +1.
    """

    def __init__(self, mesh, r):
        dim = mesh.dim
        if (dim, r) not in SUPPORTED_DEGREES:
            supported = ", ".join(f"({d}D, r={rr})" for d, rr in SUPPORTED_DEGREES)
            raise UnsupportedDegreeError(
                f"RT_{r} in {dim}D is not supported; available: {supported}"
            )
        self.mesh = mesh
        self.r = r
        self.n_face_dofs = comb(dim + r - 1, r)
        self.n_interior_dofs = dim * comb(dim + r - 1, r - 1) if r >= 1 else 0
        self.n_loc = rt_local_dim(dim, r)
        assert self.n_loc == (dim + 1) * self.n_face_dofs + self.n_interior_dofs

        nf, nc = mesh.n_faces, mesh.n_cells
        self.interior_offset = nf * self.n_face_dofs
        self.n_dofs = self.interior_offset + nc * self.n_interior_dofs

        cell_dofs = np.empty((nc, self.n_loc), dtype=np.int64)
        cell_signs = np.ones((nc, self.n_loc), dtype=np.int64)
        for i in range(dim + 1):
            for j in range(self.n_face_dofs):
                col = i * self.n_face_dofs + j
                cell_dofs[:, col] = mesh.cell_faces[:, i] * self.n_face_dofs + j
                cell_signs[:, col] = mesh.cell_face_signs[:, i]
        if self.n_interior_dofs:
            base = self.interior_offset + self.n_interior_dofs * np.arange(nc)
            cell_dofs[:, (dim + 1) * self.n_face_dofs :] = (
                base[:, None] + np.arange(self.n_interior_dofs)
            )
        self.cell_dofs = cell_dofs
        self.cell_signs = cell_signs

        self.span = RtSpanningSet(dim, r)
        self.face_basis = FaceMomentBasis(dim, r)
        self.interior_exps = monomial_exponents(dim, r - 1)
        self.centers = mesh.vertices[mesh.cells].mean(axis=1)
        self.scales = mesh.cell_diameters
        self.coeff = self._build_dual_coefficients()
        self._tab = {}

    # -- local frame -----------------------------------------------------
    def _scaled(self, cells, x):
        """Scaled local coordinates of physical points x (k, ..., d)."""
        shape = (-1,) + (1,) * (x.ndim - 2) + (x.shape[-1],)
        return (x - self.centers[cells].reshape(shape)) / self.scales[cells].reshape(shape[:-1] + (1,))

    def _moment_rows(self, cells):
        """Functional matrix A[l, s] = lambda_l(span_s) for the given cells."""
        mesh, dim, r = self.mesh, self.mesh.dim, self.r
        frule = face_rule(dim, 2 * r + 2)
        mu = self.face_basis.tabulate(frule.points)  # (n_fd, nqf)
        fidx = mesh.cell_faces[cells]  # (k, d+1)
        fcoords = mesh.vertices[mesh.face_vertices[fidx]]  # (k, d+1, d, d)
        w0 = fcoords[:, :, 0, :]
        edges = fcoords[:, :, 1:, :] - w0[:, :, None, :]
        X = np.einsum("qm,cimx->ciqx", frule.points, edges) + w0[:, :, None, :]
        jac = mesh.face_measures[fidx] / REFERENCE_MEASURE[dim - 1]
        nout = mesh.cell_outward_normals[cells]  # (k, d+1, d)

        S = self.span.tabulate(self._scaled(cells, X))  # (k, d+1, nqf, ns, d)
        sn = np.einsum("ciqsx,cix->ciqs", S, nout)
        rows_face = np.einsum("jq,q,ciqs->cijs", mu, frule.weights, sn) * jac[:, :, None, None]
        rows_face = rows_face.reshape(len(cells), (dim + 1) * self.n_face_dofs, self.span.n_span)
        if not self.n_interior_dofs:
            return rows_face

        crule = simplex_rule(dim, 2 * r + 2)
        Xc = np.einsum("cij,qj->cqi", mesh.B[cells], crule.points) + mesh.b[cells, None, :]
        U = self._scaled(cells, Xc)
        Sc = self.span.tabulate(U)  # (k, nq, ns, d)
        mb = eval_monomials(self.interior_exps, U)  # (k, nq, nb)
        rows_int = np.einsum("q,cqb,cqsx->cxbs", crule.weights, mb, Sc) * mesh.det_B[
            cells, None, None, None
        ]
        rows_int = rows_int.reshape(len(cells), self.n_interior_dofs, self.span.n_span)
        return np.concatenate([rows_face, rows_int], axis=1)

    def _build_dual_coefficients(self):
        nc = self.mesh.n_cells
        coeff = np.empty((nc, self.n_loc, self.span.n_span))
        for lo in range(0, nc, _CHUNK):
            cells = np.arange(lo, min(lo + _CHUNK, nc))
            A = self._moment_rows(cells)
            try:
                coeff[cells] = np.linalg.inv(A).transpose(0, 2, 1)
            except np.linalg.LinAlgError as exc:
                raise NumericalDegeneracyError(
                    f"singular RT moment system in cell block starting at {lo}"
                ) from exc
        return coeff

    # -- evaluation -------------------------------------------------------
    def tabulate(self, rule):
        """Basis values and divergences at rule points on every cell.

        Returns (V, DV) with V (n_cells, n_loc, nq, d) and DV (n_cells,
        n_loc, nq); cached per rule degree.
        """
        key = rule.degree
        if key not in self._tab:
            mesh = self.mesh
            nc, nq = mesh.n_cells, rule.n_points
            V = np.empty((nc, self.n_loc, nq, mesh.dim))
            DV = np.empty((nc, self.n_loc, nq))
            for lo in range(0, nc, _CHUNK):
                cells = np.arange(lo, min(lo + _CHUNK, nc))
                X = np.einsum("cij,qj->cqi", mesh.B[cells], rule.points) + mesh.b[cells, None, :]
                U = self._scaled(cells, X)
                S = self.span.tabulate(U)
                DS = self.span.tabulate_divergence(U)
                V[cells] = np.einsum("cms,cqsd->cmqd", self.coeff[cells], S)
                DV[cells] = np.einsum("cms,cqs->cmq", self.coeff[cells], DS) / self.scales[
                    cells, None, None
                ]
            self._tab[key] = (V, DV)
        return self._tab[key]

    def local_coefficients(self, coeffs):
        """Orientation-signed local coefficients per cell: (n_cells, n_loc)."""
        return coeffs[self.cell_dofs] * self.cell_signs

    def cell_values(self, coeffs, rule):
        """Field values at rule points on every cell: (n_cells, nq, d)."""
        mesh = self.mesh
        a = self.local_coefficients(coeffs)
        out = np.empty((mesh.n_cells, rule.n_points, mesh.dim))
        for lo in range(0, mesh.n_cells, _CHUNK):
            cells = np.arange(lo, min(lo + _CHUNK, mesh.n_cells))
            X = np.einsum("cij,qj->cqi", mesh.B[cells], rule.points) + mesh.b[cells, None, :]
            out[cells] = self.values_at_physical(cells, X, a)
        return out

    def cell_divergences(self, coeffs, rule):
        """Divergence values at rule points on every cell: (n_cells, nq)."""
        a = self.local_coefficients(coeffs)
        mesh = self.mesh
        out = np.empty((mesh.n_cells, rule.n_points))
        for lo in range(0, mesh.n_cells, _CHUNK):
            cells = np.arange(lo, min(lo + _CHUNK, mesh.n_cells))
            X = np.einsum("cij,qj->cqi", mesh.B[cells], rule.points) + mesh.b[cells, None, :]
            U = self._scaled(cells, X)
            DS = self.span.tabulate_divergence(U) / self.scales[cells, None, None]
            b = np.einsum("cm,cms->cs", a[cells], self.coeff[cells])
            out[cells] = np.einsum("cs,cqs->cq", b, DS)
        return out

    def values_at_physical(self, cells, x, signed_local_coeffs):
        """Field values at physical points x (k, nq, d) for the given cells."""
        b = np.einsum("cm,cms->cs", signed_local_coeffs[cells], self.coeff[cells])
        S = self.span.tabulate(self._scaled(cells, x))
        return np.einsum("cs,cqsd->cqd", b, S)

    def basis_values_at_physical(self, cells, x):
        """All local basis values at physical points: (k, n_loc, nq, d)."""
        S = self.span.tabulate(self._scaled(cells, x))
        return np.einsum("cms,cqsd->cmqd", self.coeff[cells], S)

    def face_normal_traces(self, coeffs, ctx):
        """Normal traces (against the global normal) per side: (nf, 2, nqf)."""
        a = self.local_coefficients(coeffs)
        vals = np.empty((self.mesh.n_faces, 2, ctx.n_points))
        for side in range(2):
            v = self.values_at_physical(ctx.side_cells[:, side], ctx.phys_points, a)
            vals[:, side] = np.einsum("fqd,fd->fq", v, self.mesh.face_normals)
        vals[ctx.boundary, 1] = 0.0
        return vals

    # -- moment extraction (global dof coefficients from data) ------------
    def face_dof_coefficients(self, ctx, face_values):
        """Face dof coefficients of data given at face quadrature points.

        face_values (nf, nqf) are normal-component data oriented by the global
        face normal; returns (nf, n_face_dofs) with entries int_F q mu_j ds.
        """
        mu = self.face_basis.tabulate(ctx.points)
        return np.einsum("fq,q,jq->fj", face_values, ctx.weights, mu) * ctx.jac[:, None]

    def interior_dof_coefficients(self, rule, vec_values):
        """Interior dof coefficients of vector data at rule points.

        vec_values (nc, nq, d); returns (nc, n_interior_dofs) with entries
        int_K data . omega dx for the interior test monomials.
        """
        if not self.n_interior_dofs:
            return np.zeros((self.mesh.n_cells, 0))
        mesh = self.mesh
        out = np.empty((mesh.n_cells, self.n_interior_dofs))
        for lo in range(0, mesh.n_cells, _CHUNK):
            cells = np.arange(lo, min(lo + _CHUNK, mesh.n_cells))
            X = np.einsum("cij,qj->cqi", mesh.B[cells], rule.points) + mesh.b[cells, None, :]
            mb = eval_monomials(self.interior_exps, self._scaled(cells, X))
            mom = np.einsum("q,cqb,cqx->cxb", rule.weights, mb, vec_values[cells])
            out[cells] = (mom * mesh.det_B[cells, None, None]).reshape(len(cells), -1)
        return out


def build_rt_space(mesh, r):
    """Construct the degree-r Raviart-Thomas space over ``mesh``."""
    return RtSpace(mesh, r)


def build_dg_space(mesh, r):
    """Construct the discontinuous P_r space over ``mesh``."""
    return DgSpace(mesh, r)


# ----------------------------------------------------------------------
# face quadrature context
# ----------------------------------------------------------------------

@dataclass(eq=False)
class FaceContext:
    """Quadrature data on every mesh face for trace and jump evaluation."""

    degree: int
    points: np.ndarray  # (nqf, d-1) reference-face coordinates
    weights: np.ndarray  # (nqf,)
    phys_points: np.ndarray  # (nf, nqf, d)
    jac: np.ndarray  # (nf,) surface Jacobian, measure = jac * |Shat|
    ref_coords: np.ndarray  # (2, nf, nqf, d) per-side reference coordinates
    side_cells: np.ndarray  # (nf, 2) adjacent cells, boundary side clipped to 0
    boundary: np.ndarray  # (nf,) bool

    @property
    def n_points(self):
        return self.weights.shape[0]


def face_context(mesh, degree):
    """Build (and cache on the mesh) a FaceContext of the given degree."""
    key = ("facectx", degree)
    if key in mesh._cache:
        return mesh._cache[key]
    rule = face_rule(mesh.dim, degree)
    fv = mesh.vertices[mesh.face_vertices]  # (nf, d, d)
    edges = fv[:, 1:, :] - fv[:, :1, :]
    phys = np.einsum("qm,fmx->fqx", rule.points, edges) + fv[:, None, 0, :]
    jac = mesh.face_measures / REFERENCE_MEASURE[mesh.dim - 1]
    side_cells = np.maximum(mesh.face_cells, 0)
    ref = np.stack(
        [mesh.reference_coords(side_cells[:, side], phys) for side in range(2)]
    )
    ctx = FaceContext(
        degree=degree,
        points=rule.points,
        weights=rule.weights,
        phys_points=phys,
        jac=jac,
        ref_coords=ref,
        side_cells=side_cells,
        boundary=mesh.face_is_boundary,
    )
    mesh._cache[key] = ctx
    return ctx


# ----------------------------------------------------------------------
# reference-basis evaluation (Piola)
# ----------------------------------------------------------------------

_REFERENCE_SPACES = {}


def reference_rt_space(dim, r):
    """RT space on the one-cell reference mesh (cached per (dim, r))."""
    key = (dim, r)
    if key not in _REFERENCE_SPACES:
        _REFERENCE_SPACES[key] = RtSpace(reference_simplex_mesh(dim), r)
    return _REFERENCE_SPACES[key]


def reference_basis_values(dim, r, xhat):
    """Reference RT basis values at points xhat (nq, d): (n_loc, nq, d)."""
    space = reference_rt_space(dim, r)
    xhat = np.atleast_2d(np.asarray(xhat, dtype=float))
    return space.basis_values_at_physical(np.array([0]), xhat[None, :, :])[0]


def evaluate_rt_basis(geom, r, local_dof, xhat):
    """Physical RT basis values via the Piola map: (1/det B) B zhat(xhat).

    ``local_dof`` indexes the reference cell's local basis (face dofs first,
    face-major in local face order; then interior dofs).  Returns values at
    the reference points xhat, shape (nq, d) (or (d,) for a single point).
    """
    xhat = np.asarray(xhat, dtype=float)
    single = xhat.ndim == 1
    vals = reference_basis_values(geom.dim, r, np.atleast_2d(xhat))
    n_loc = vals.shape[0]
    if not 0 <= local_dof < n_loc:
        raise ValueError(f"local dof {local_dof} out of range [0, {n_loc})")
    phys = vals[local_dof] @ geom.B.T / geom.det_B
    return phys[0] if single else phys


def evaluate_field(field, cell, xhat):
    """Evaluate a DiscreteField on one cell at reference points.

    Returns (nq,) for DG fields and (nq, d) for RT fields; scalar/vector for
    a single point.
    """
    xhat = np.asarray(xhat, dtype=float)
    single = xhat.ndim == 1
    pts = np.atleast_2d(xhat)
    space = field.space
    cell = int(cell)
    if not 0 <= cell < space.mesh.n_cells:
        raise ValueError(f"cell index {cell} out of range [0, {space.mesh.n_cells})")
    if isinstance(space, DgSpace):
        out = field.coeffs[space.cell_dofs[cell]] @ space.basis.tabulate(pts)
    else:
        x = space.mesh.map_points(cell, pts)
        a = space.local_coefficients(field.coeffs)
        out = space.values_at_physical(np.array([cell]), x[None, :, :], a)[0]
    return out[0] if single else out
