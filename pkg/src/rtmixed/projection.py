"""Elliptic projector onto the mixed RT x DG pair.

The projected pair (sigma_P, u_P) of an exact solution u satisfies

    (sigma_P, chi) + (u_P, div chi) = 0        for all chi in the RT space,
    (div sigma_P, v) = (laplace u, v)          for all v in the DG space,

which is one mixed Poisson solve with the analytic Laplacian as data.  It
supplies the scheme's initial data and the projection-error diagnostics.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import assemble_saddle, assemble_source
from .solver import factor
from .spaces import DiscreteField


@dataclass
class ExactSolutionSpec:
    """Pointwise callbacks of a manufactured solution on Omega x [0, T].

    All callbacks take (x, t) with x of shape (..., d); ``u`` must vanish on
    the domain boundary (homogeneous Dirichlet).
    """

    u: callable
    grad_u: callable
    laplace_u: callable
    u_t: callable


def poisson_factorization(rt, dg):
    """Factor the mixed Poisson matrix [[M, B], [-B^T, 0]] for the pair."""
    return factor(assemble_saddle(rt, dg, tau=None))


def elliptic_project(rt, dg, exact, t, fact=None):
    """Project the exact solution at time t onto the mixed pair.

    Returns (sigma_P, u_P) as DiscreteFields.  ``fact`` may carry a reusable
    Poisson factorization from :func:`poisson_factorization`.
    """
    if rt.mesh is not dg.mesh:
        raise ValueError("RT and DG spaces must share the same mesh")
    if fact is None:
        fact = poisson_factorization(rt, dg)
    # second block row reads -(div sigma, v) = rhs_u, so rhs_u = -(laplace u, v)
    rhs_u = -assemble_source(dg, exact.laplace_u, t)
    sigma_c, u_c = fact.solve(np.zeros(rt.n_dofs), rhs_u)
    return (
        DiscreteField(rt, sigma_c, time_tag=t),
        DiscreteField(dg, u_c, time_tag=t),
    )


def initial_data(rt, dg, exact, fact=None):
    """Discrete initial data: the elliptic projection at t = 0."""
    return elliptic_project(rt, dg, exact, 0.0, fact=fact)
