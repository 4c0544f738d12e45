import numpy as np
import pytest

from rtmixed.analysis import l2_error
from rtmixed.assembly import assemble_saddle, assemble_source
from rtmixed.mesh import build_unit_cube_mesh, build_unit_square_mesh
from rtmixed.problems import allen_cahn_2d, combined_3d
from rtmixed.projection import ExactSolutionSpec, elliptic_project, initial_data, poisson_factorization
from rtmixed.solver import factor
from rtmixed.spaces import build_dg_space, build_rt_space


def spaces_2d(M, r=0):
    mesh = build_unit_square_mesh(M)
    return mesh, build_rt_space(mesh, r), build_dg_space(mesh, r)


def zero_spec(dim):
    zero_s = lambda x, t: np.zeros(x.shape[:-1])
    zero_v = lambda x, t: np.zeros(x.shape)
    return ExactSolutionSpec(u=zero_s, grad_u=zero_v, laplace_u=zero_s, u_t=zero_s)


def test_zero_solution_projects_to_zero():
    _, rt, dg = spaces_2d(2)
    sigma_p, u_p = elliptic_project(rt, dg, zero_spec(2), 0.3)
    assert np.allclose(sigma_p.coeffs, 0.0) and np.allclose(u_p.coeffs, 0.0)


@pytest.mark.parametrize("r", [0, 1])
def test_defining_equations_residuals(r):
    # (4.21): (sigma_P, chi) + (u_P, div chi) = 0; (4.22): (div sigma_P, v) = (lap u, v)
    mesh, rt, dg = spaces_2d(4, r)
    exact, _, _ = allen_cahn_2d()
    system = assemble_saddle(rt, dg, tau=None)
    sigma_p, u_p = elliptic_project(rt, dg, exact, 0.5, fact=factor(system))
    res1 = system.M @ sigma_p.coeffs + system.B @ u_p.coeffs
    assert np.abs(res1).max() < 1e-10
    res2 = system.B.T @ sigma_p.coeffs - assemble_source(dg, exact.laplace_u, 0.5)
    assert np.abs(res2).max() < 1e-10


def test_projection_error_rate_2d():
    exact, _, _ = allen_cahn_2d()
    errors = []
    for M in (8, 16, 32):
        _, rt, dg = spaces_2d(M, 0)
        _, u_p = elliptic_project(rt, dg, exact, 0.0)
        errors.append(l2_error(u_p, exact.u, 0.0))
    orders = np.log2(np.array(errors[:-1]) / errors[1:])
    assert np.all(np.abs(orders - 1.0) < 0.1)


def test_initial_data_rate_3d():
    exact, _, _ = combined_3d()
    errors = []
    for M in (4, 8, 16):
        mesh = build_unit_cube_mesh(M)
        rt, dg = build_rt_space(mesh, 0), build_dg_space(mesh, 0)
        sigma0, _ = initial_data(rt, dg, exact)
        errors.append(l2_error(sigma0, exact.grad_u, 0.0))
    orders = np.log2(np.array(errors[:-1]) / errors[1:])
    assert np.all(np.abs(orders - 1.0) < 0.15)


def test_initial_data_is_projection_at_zero():
    _, rt, dg = spaces_2d(4)
    exact, _, _ = allen_cahn_2d()
    fact = poisson_factorization(rt, dg)
    s0, u0 = initial_data(rt, dg, exact, fact=fact)
    s1, u1 = elliptic_project(rt, dg, exact, 0.0, fact=fact)
    assert np.array_equal(s0.coeffs, s1.coeffs)
    assert np.array_equal(u0.coeffs, u1.coeffs)
    assert l2_error(u0, exact.u, 0.0) < 0.02


def _locate_square_cells(M, x):
    """Cell index of each point in the structured unit-square mesh."""
    xi = np.clip((x[..., 0] * M).astype(int), 0, M - 1)
    yi = np.clip((x[..., 1] * M).astype(int), 0, M - 1)
    upper = (x[..., 1] * M - yi) > (x[..., 0] * M - xi)
    return 2 * (xi + yi * M) + upper.astype(int)


def test_projection_reproduces_discrete_compatible_data():
    # feed the projector data whose exact mixed solution is itself discrete:
    # solve a mixed Poisson problem, then project using div(sigma_d) as the
    # Laplacian callback; uniqueness forces the projector to return the pair
    M = 4
    mesh, rt, dg = spaces_2d(M, 1)
    system = assemble_saddle(rt, dg, tau=None)
    fact = factor(system)
    rhs_u = -assemble_source(dg, lambda x, t: np.sin(3 * x[..., 0]) + x[..., 1], 0.0)
    sigma_c, u_c = fact.solve(np.zeros(rt.n_dofs), rhs_u)

    b = np.einsum("cm,cms->cs", rt.local_coefficients(sigma_c), rt.coeff)

    def laplace_cb(x, t):
        # pointwise divergence of the discrete flux (piecewise polynomial)
        cells = _locate_square_cells(M, x).ravel()
        flat = x.reshape(-1, x.shape[-1])
        u = (flat - rt.centers[cells]) / rt.scales[cells, None]
        ds = rt.span.tabulate_divergence(u) / rt.scales[cells, None]
        return np.einsum("ns,ns->n", b[cells], ds).reshape(x.shape[:-1])

    spec = ExactSolutionSpec(u=None, grad_u=None, laplace_u=laplace_cb, u_t=None)
    sigma_p, u_p = elliptic_project(rt, dg, spec, 0.0, fact=fact)
    assert np.abs(sigma_p.coeffs - sigma_c).max() < 1e-10
    assert np.abs(u_p.coeffs - u_c).max() < 1e-10
