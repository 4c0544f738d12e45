"""Built-in manufactured problems for the convergence and stability studies.

Each builder returns (ExactSolutionSpec, NonlinearitySpec, dim); the source
term is derived from the exact solution inside the time stepper.
"""

import numpy as np

from .assembly import NonlinearitySpec
from .projection import ExactSolutionSpec


def _allen_cahn_u(x, t):
    return np.exp(t) * x[..., 0] * (1 - x[..., 0]) * x[..., 1] * (1 - x[..., 1])


def _allen_cahn_grad(x, t):
    gx = (1 - 2 * x[..., 0]) * x[..., 1] * (1 - x[..., 1])
    gy = x[..., 0] * (1 - x[..., 0]) * (1 - 2 * x[..., 1])
    return np.exp(t) * np.stack([gx, gy], axis=-1)


def _allen_cahn_laplace(x, t):
    return np.exp(t) * (-2 * x[..., 1] * (1 - x[..., 1]) - 2 * x[..., 0] * (1 - x[..., 0]))


def allen_cahn_2d():
    """2D cubic-reaction problem: u = exp(t) x y (1-x)(1-y), f(u) = u^3."""
    exact = ExactSolutionSpec(
        u=_allen_cahn_u,
        grad_u=_allen_cahn_grad,
        laplace_u=_allen_cahn_laplace,
        u_t=_allen_cahn_u,
    )
    return exact, NonlinearitySpec(cubic=True, double_well=False), 2


def _combined_u(x, t):
    return (
        np.exp(-t)
        * np.sin(np.pi * x[..., 0])
        * np.sin(2 * np.pi * x[..., 1])
        * x[..., 2]
        * (1 - x[..., 2])
    )


def _combined_grad(x, t):
    s1 = np.sin(np.pi * x[..., 0])
    c1 = np.cos(np.pi * x[..., 0])
    s2 = np.sin(2 * np.pi * x[..., 1])
    c2 = np.cos(2 * np.pi * x[..., 1])
    w = x[..., 2] * (1 - x[..., 2])
    e = np.exp(-t)
    return np.stack(
        [
            e * np.pi * c1 * s2 * w,
            e * 2 * np.pi * s1 * c2 * w,
            e * s1 * s2 * (1 - 2 * x[..., 2]),
        ],
        axis=-1,
    )


def _combined_laplace(x, t):
    s1 = np.sin(np.pi * x[..., 0])
    s2 = np.sin(2 * np.pi * x[..., 1])
    w = x[..., 2] * (1 - x[..., 2])
    return -np.exp(-t) * s1 * s2 * (5 * np.pi**2 * w + 2)


def _combined_ut(x, t):
    return -_combined_u(x, t)


def combined_3d():
    """3D advection + double-well problem:
    u = exp(-t) sin(pi x) sin(2 pi y) z(1-z), f = (b . grad u) u + u^3 - u."""
    exact = ExactSolutionSpec(
        u=_combined_u,
        grad_u=_combined_grad,
        laplace_u=_combined_laplace,
        u_t=_combined_ut,
    )
    return exact, NonlinearitySpec(advection=True, b=(1.0, 1.0, 1.0), cubic=True, double_well=True), 3


BUILTIN_EXAMPLES = {
    "allen_cahn_2d": allen_cahn_2d,
    "combined_3d": combined_3d,
}
