"""Assembly of the mixed saddle-point blocks and load vectors.

The step system for the linearized backward-Euler scheme is

    [ M   B  ] [sigma]   [ 0     ]
    [-B^T D/tau] [ u  ] = [ rhs_u ]

with M the RT mass matrix, B_ik = (psi_k, div phi_i) and D the DG mass
matrix.  With tau = None the lower-right block is zero, which is the mixed
Poisson / elliptic projection operator.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import simplex_rule


@dataclass(frozen=True)
class NonlinearitySpec:
    """Switches for the lagged nonlinear term f(u, sigma).

    advection : include (b . sigma) u; ``b`` defaults to the all-ones vector.
    cubic     : include the double-well term u^3 - u; with
                ``double_well=False`` the plain u^3 is used instead.
    """

    advection: bool = False
    b: tuple = None
    cubic: bool = False
    double_well: bool = True

    def b_vector(self, dim):
        if self.b is None:
            return np.ones(dim)
        b = np.asarray(self.b, dtype=float)
        if b.shape != (dim,):
            raise ValueError(f"advection vector must have shape ({dim},), got {b.shape}")
        return b

    @property
    def is_zero(self):
        return not (self.advection or self.cubic)

    def evaluate(self, u_vals, sigma_vals, dim):
        """Pointwise f(u, sigma); sigma_vals may be None when advection is off."""
        f = np.zeros_like(u_vals)
        if self.cubic:
            f += u_vals**3
            if self.double_well:
                f -= u_vals
        if self.advection:
            f += (sigma_vals @ self.b_vector(dim)) * u_vals
        return f


@dataclass(eq=False)
class SaddleSystem:
    """Assembled blocks of the mixed system plus the space handles.

    ``factorization`` is populated by :func:`rtmixed.solver.factor` so a
    system can carry its reusable factorization around.
    """

    M: sp.csr_matrix
    B: sp.csr_matrix
    D: sp.csr_matrix
    tau: float
    rt: object
    dg: object
    factorization: object = None

    @property
    def n_rt(self):
        return self.M.shape[0]

    @property
    def n_dg(self):
        return self.D.shape[0]

    def step_matrix(self):
        """Full indefinite step matrix [[M, B], [-B^T, D/tau]] (csc)."""
        lower_right = None if self.tau is None else self.D / self.tau
        return sp.bmat([[self.M, self.B], [-self.B.T, lower_right]], format="csc")


def assemble_saddle(rt, dg, tau):
    """Assemble M, B, D at quadrature degree 2r+2.

    ``tau`` is the time step (> 0), or None for the elliptic (Poisson)
    operator with zero lower-right block.
    """
    if rt.mesh is not dg.mesh:
        raise ValueError("RT and DG spaces must share the same mesh")
    if tau is not None and not tau > 0:
        raise ValueError(f"time step must be positive, got {tau}")
    mesh = rt.mesh
    r = max(rt.r, dg.r)
    rule = simplex_rule(mesh.dim, 2 * r + 2)
    w = rule.weights
    det = mesh.det_B

    V, DV = rt.tabulate(rule)
    psi = dg.tabulate(rule)
    signs = rt.cell_signs.astype(float)

    m_loc = np.einsum("ciqd,cjqd,q->cij", V, V, w) * det[:, None, None]
    m_loc *= signs[:, :, None] * signs[:, None, :]
    rows = np.broadcast_to(rt.cell_dofs[:, :, None], m_loc.shape).ravel()
    cols = np.broadcast_to(rt.cell_dofs[:, None, :], m_loc.shape).ravel()
    M = sp.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(rt.n_dofs, rt.n_dofs)).tocsr()

    b_loc = np.einsum("ciq,kq,q->cik", DV, psi, w) * det[:, None, None]
    b_loc *= signs[:, :, None]
    rows = np.broadcast_to(rt.cell_dofs[:, :, None], b_loc.shape).ravel()
    cols = np.broadcast_to(dg.cell_dofs[:, None, :], b_loc.shape).ravel()
    B = sp.coo_matrix((b_loc.ravel(), (rows, cols)), shape=(rt.n_dofs, dg.n_dofs)).tocsr()

    d_ref = np.einsum("kq,lq,q->kl", psi, psi, w)
    d_loc = det[:, None, None] * d_ref[None]
    rows = np.broadcast_to(dg.cell_dofs[:, :, None], d_loc.shape).ravel()
    cols = np.broadcast_to(dg.cell_dofs[:, None, :], d_loc.shape).ravel()
    D = sp.coo_matrix((d_loc.ravel(), (rows, cols)), shape=(dg.n_dofs, dg.n_dofs)).tocsr()

    return SaddleSystem(M=M, B=B, D=D, tau=tau, rt=rt, dg=dg)


_CHUNK = 8192


def assemble_source(dg, g, t, degree=None):
    """Load vector with entries (g(., t), psi_k).

    The default quadrature degree 2r+10 keeps the quadrature error of the
    manufactured sources (which carry the cubed solution) below 1e-10 even on
    the coarsest meshes.
    """
    mesh = dg.mesh
    rule = simplex_rule(mesh.dim, 2 * dg.r + 10 if degree is None else degree)
    psi = dg.tabulate(rule)
    out = np.empty(dg.n_dofs)
    for lo in range(0, mesh.n_cells, _CHUNK):
        hi = min(lo + _CHUNK, mesh.n_cells)
        x = np.einsum("cij,qj->cqi", mesh.B[lo:hi], rule.points) + mesh.b[lo:hi, None, :]
        gv = np.asarray(g(x, t), dtype=float)
        loc = np.einsum("cq,kq,q->ck", gv, psi, rule.weights) * mesh.det_B[lo:hi, None]
        out[dg.cell_dofs[lo:hi].ravel()] = loc.ravel()
    return out


def assemble_nonlinear_load(dg, rt, u_prev, sigma_prev, fspec):
    """Load vector with entries (f(u_prev, sigma_prev), psi_k).

    The nonlinearity is composed pointwise at quadrature points (degree 3r+2,
    exact for the cubic term at the supported degrees).
    """
    mesh = dg.mesh
    if u_prev.space is not dg or sigma_prev.space is not rt:
        raise ValueError("previous-step fields must live on the given spaces")
    if fspec.is_zero:
        return np.zeros(dg.n_dofs)
    rule = simplex_rule(mesh.dim, 3 * max(dg.r, rt.r) + 2)
    psi = dg.tabulate(rule)
    u_vals = dg.cell_values(u_prev.coeffs, rule)
    sigma_vals = rt.cell_values(sigma_prev.coeffs, rule) if fspec.advection else None
    f = fspec.evaluate(u_vals, sigma_vals, mesh.dim)
    loc = np.einsum("cq,kq,q->ck", f, psi, rule.weights) * mesh.det_B[:, None]
    out = np.empty(dg.n_dofs)
    out[dg.cell_dofs.ravel()] = loc.ravel()
    return out
