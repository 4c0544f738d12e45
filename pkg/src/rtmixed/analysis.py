"""Error norms, the broken DG norm, Lp norms, embedding ratios and orders.

The DG norm of a discontinuous field is the broken H^1 norm

    ||u||_DG^2 = sum_K int_K |grad u|^2 + sum_F (1/h_F) int_F |[u]|^2,

with the jump [u] taken lower-indexed-cell minus higher-indexed (the full
trace on boundary faces).  For any pair (sigma_h, u_h) satisfying the first
mixed equation, integrating by parts against the locally projected field
chi_h with data (grad u_h, -[u]/h_F) yields ||u_h||_DG^2 = (sigma_h, chi_h),
the computable half of the discrete Sobolev embedding chain
||u_h||_Lp <= C ||u_h||_DG <= C ||sigma_h||_L2.
"""

from dataclasses import dataclass, field

import numpy as np

from .quadrature import simplex_rule
from .spaces import DgSpace, DiscreteField, face_context

_CHUNK = 8192

SUPPORTED_P = (2, 3, 4, 6)


def _cell_points(mesh, rule, lo, hi):
    return np.einsum("cij,qj->cqi", mesh.B[lo:hi], rule.points) + mesh.b[lo:hi, None, :]


def l2_error(fld, exact, t, degree=None):
    """L2 distance between a discrete field and a pointwise callback.

    ``exact`` takes (x, t); scalar-valued for DG fields, vector-valued for RT
    fields.  Quadrature degree defaults to 2r+6.
    """
    space = fld.space
    mesh = space.mesh
    rule = simplex_rule(mesh.dim, 2 * space.r + 6 if degree is None else degree)
    total = 0.0
    if isinstance(space, DgSpace):
        vals = space.cell_values(fld.coeffs, rule)
        for lo in range(0, mesh.n_cells, _CHUNK):
            hi = min(lo + _CHUNK, mesh.n_cells)
            diff = vals[lo:hi] - np.asarray(exact(_cell_points(mesh, rule, lo, hi), t), dtype=float)
            total += float(mesh.det_B[lo:hi] @ (diff**2 @ rule.weights))
    else:
        vals = space.cell_values(fld.coeffs, rule)
        for lo in range(0, mesh.n_cells, _CHUNK):
            hi = min(lo + _CHUNK, mesh.n_cells)
            diff = vals[lo:hi] - np.asarray(exact(_cell_points(mesh, rule, lo, hi), t), dtype=float)
            total += float(mesh.det_B[lo:hi] @ ((diff**2).sum(-1) @ rule.weights))
    return np.sqrt(total)


def sigma_l2_norm(fld, degree=None):
    """L2 norm of an RT field."""
    zero = lambda x, t: np.zeros(x.shape[:-1] + (x.shape[-1],))
    return l2_error(fld, zero, 0.0, degree=degree)


def lp_norm(fld, p):
    """Lp norm of a DG field for p in {2, 3, 4, 6}, quadrature degree p r + 4."""
    if p not in SUPPORTED_P:
        raise ValueError(f"p must be one of {SUPPORTED_P}, got {p}")
    space = fld.space
    if not isinstance(space, DgSpace):
        raise ValueError("lp_norm expects a field on a DG space")
    mesh = space.mesh
    rule = simplex_rule(mesh.dim, p * space.r + 4)
    vals = space.cell_values(fld.coeffs, rule)
    total = float(mesh.det_B @ (np.abs(vals) ** p @ rule.weights))
    return total ** (1.0 / p)


def dg_norm(fld):
    """Broken H^1 norm with 1/h_F face-jump penalties."""
    space = fld.space
    if not isinstance(space, DgSpace):
        raise ValueError("dg_norm expects a field on a DG space")
    mesh = space.mesh
    r = space.r
    total = 0.0
    if r >= 1:
        rule = simplex_rule(mesh.dim, 2 * r)
        grads = space.cell_gradients(fld.coeffs, rule)
        total += float(mesh.det_B @ ((grads**2).sum(-1) @ rule.weights))
    ctx = face_context(mesh, 2 * r + 2)
    traces = space.face_traces(fld.coeffs, ctx)
    jumps = traces[:, 0] - traces[:, 1]
    face_int = ctx.jac * (jumps**2 @ ctx.weights)
    total += float((face_int / mesh.face_diameters).sum())
    return np.sqrt(total)


def flux_reconstruction(u_fld, rt):
    """The chi_h of the embedding chain: local projection of the data
    (grad u_h, -[u_h]/h_F), returned as a global RT field."""
    space = u_fld.space
    mesh = space.mesh
    if not isinstance(space, DgSpace) or rt.mesh is not mesh:
        raise ValueError("flux_reconstruction needs a DG field and an RT space on the same mesh")
    r = rt.r
    coeffs = np.zeros(rt.n_dofs)

    ctx = face_context(mesh, 2 * r + 2)
    traces = space.face_traces(u_fld.coeffs, ctx)
    jumps = traces[:, 0] - traces[:, 1]
    qvals = -jumps / mesh.face_diameters[:, None]
    coeffs[: rt.interior_offset] = rt.face_dof_coefficients(ctx, qvals).ravel()

    if rt.n_interior_dofs:
        rule = simplex_rule(mesh.dim, 2 * r + 2)
        grads = space.cell_gradients(u_fld.coeffs, rule)
        coeffs[rt.interior_offset :] = rt.interior_dof_coefficients(rule, grads).ravel()
    return DiscreteField(rt, coeffs, time_tag=u_fld.time_tag)


def rt_inner_product(a_fld, b_fld):
    """(a, b) over the mesh for two RT fields (exact quadrature)."""
    rt = a_fld.space
    mesh = rt.mesh
    rule = simplex_rule(mesh.dim, 2 * rt.r + 2)
    va = rt.cell_values(a_fld.coeffs, rule)
    vb = b_fld.space.cell_values(b_fld.coeffs, rule)
    return float(mesh.det_B @ ((va * vb).sum(-1) @ rule.weights))


def chain_inequality(u_fld, sigma_fld):
    """Both sides of ||u_h||_DG^2 <= (sigma_h, chi_h).

    Returns (dg_norm_squared, inner_product, chi_field).
    """
    chi = flux_reconstruction(u_fld, sigma_fld.space)
    return dg_norm(u_fld) ** 2, rt_inner_product(sigma_fld, chi), chi


# ----------------------------------------------------------------------
# study records and convergence orders
# ----------------------------------------------------------------------

@dataclass
class StudyRecord:
    """Per-run norms, errors and embedding ratios of one scheme solve."""

    label: str
    M: int
    r: int
    tau: float
    err_u_L2: float = None
    err_sigma_L2: float = None
    err_sigma_accum: float = None
    sigma_l2: float = None
    dg_norm: float = None
    lp_norms: dict = field(default_factory=dict)
    embed_ratio: dict = field(default_factory=dict)
    lp_over_dg: dict = field(default_factory=dict)
    dg_over_sigma: float = None
    chain_dg_sq: float = None
    chain_inner: float = None
    eq1_residual: float = None
    wall_time: float = None
    history: list = None


@dataclass
class ConvergenceReport:
    """Ordered study records plus fitted convergence orders per column."""

    records: list
    orders: dict = field(default_factory=dict)


def compute_record(label, M, r, tau, u_h, sigma_h, exact, t, wall_time,
                   eq1_residual, p_list=SUPPORTED_P, err_sigma_accum=None):
    """Collect every StudyRecord column from a finished solve."""
    rec = StudyRecord(label=label, M=M, r=r, tau=tau, wall_time=wall_time,
                      eq1_residual=eq1_residual, err_sigma_accum=err_sigma_accum)
    if exact is not None:
        rec.err_u_L2 = l2_error(u_h, exact.u, t)
        rec.err_sigma_L2 = l2_error(sigma_h, exact.grad_u, t)
    rec.sigma_l2 = sigma_l2_norm(sigma_h)
    rec.dg_norm = dg_norm(u_h)
    for p in p_list:
        rec.lp_norms[p] = lp_norm(u_h, p)
        rec.embed_ratio[p] = rec.lp_norms[p] / rec.sigma_l2 if rec.sigma_l2 > 0 else None
        rec.lp_over_dg[p] = rec.lp_norms[p] / rec.dg_norm if rec.dg_norm > 0 else None
    rec.dg_over_sigma = rec.dg_norm / rec.sigma_l2 if rec.sigma_l2 > 0 else None
    rec.chain_dg_sq, rec.chain_inner, _ = chain_inequality(u_h, sigma_h)
    return rec


def convergence_orders(records, columns=("err_u_L2", "err_sigma_L2")):
    """Fitted convergence orders from records over a doubling M sequence.

    Per column: pairwise orders log2(e_M / e_2M), the order between the two
    finest levels and a least-squares fit across all levels.
    """
    if len(records) < 2:
        raise ValueError("need at least two records to fit convergence orders")
    Ms = [rec.M for rec in records]
    for a, b in zip(Ms, Ms[1:]):
        if b != 2 * a:
            raise ValueError(f"record resolutions must double: got {Ms}")
    orders = {}
    for col in columns:
        errs = [getattr(rec, col) for rec in records]
        if any(e is None for e in errs):
            continue
        errs = np.asarray(errs, dtype=float)
        pairwise = list(np.log2(errs[:-1] / errs[1:]))
        slope = np.polyfit(np.log2(Ms), np.log2(errs), 1)[0]
        orders[col] = {"pairwise": pairwise, "finest": pairwise[-1], "lsq": -slope}
    return ConvergenceReport(records=list(records), orders=orders)


EQ1_RESIDUAL_TOL = 1e-9


def embedding_study(configs, p_list=SUPPORTED_P):
    """Run the scheme over the given configs and tabulate embedding ratios.

    Each run must satisfy the first mixed equation to EQ1_RESIDUAL_TOL (the
    hypothesis of the embedding inequality); a violation raises RuntimeError.
    """
    from .timestepper import run  # deferred: timestepper imports this module

    records = []
    for config in configs:
        config.p_list = tuple(p_list)
        _, rec = run(config)
        if not rec.eq1_residual < EQ1_RESIDUAL_TOL:
            raise RuntimeError(
                f"first-equation residual {rec.eq1_residual:.3e} violates the "
                f"embedding hypothesis (tol {EQ1_RESIDUAL_TOL:.0e})"
            )
        records.append(rec)
    report = ConvergenceReport(records=records)
    try:
        report.orders = convergence_orders(records).orders
    except ValueError:
        report.orders = {}
    return report


def projection_diagnostics(rt, dg, exact, t, sigma_h, u_h, fact=None):
    """Projection-error split at time t: theta = Pi_h w - w, e = w_h - Pi_h w."""
    from .projection import elliptic_project

    sigma_p, u_p = elliptic_project(rt, dg, exact, t, fact=fact)
    diff_u = DiscreteField(dg, u_h.coeffs - u_p.coeffs)
    diff_s = DiscreteField(rt, sigma_h.coeffs - sigma_p.coeffs)
    zero_s = lambda x, tt: np.zeros(x.shape)
    zero_u = lambda x, tt: np.zeros(x.shape[:-1])
    return {
        "theta_u": l2_error(u_p, exact.u, t),
        "theta_sigma": l2_error(sigma_p, exact.grad_u, t),
        "e_u": l2_error(diff_u, zero_u, t),
        "e_sigma": l2_error(diff_s, zero_s, t),
    }
