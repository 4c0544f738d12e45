"""Shared test utilities: randomized polynomial projection data."""

import numpy as np

from rtmixed.local_projection import LocalProjectionData
from rtmixed.spaces import eval_monomials, monomial_exponents


def random_poly_data(dim, r, rng, scale=1.0):
    """Projection data with random polynomial p and q_i in physical coords."""
    exps = monomial_exponents(dim, r + 1)
    p_coef = rng.uniform(-1, 1, size=(dim, exps.shape[0])) * scale
    q_coefs = rng.uniform(-1, 1, size=(dim + 1, exps.shape[0])) * scale

    def p(x):
        return eval_monomials(exps, x) @ p_coef.T

    q = tuple(
        (lambda c: (lambda x: eval_monomials(exps, x) @ c))(q_coefs[i]) for i in range(dim + 1)
    )
    return LocalProjectionData(p=p, q=q)


def scaled_poly_data(dim, r, rng, center, scale):
    """Random polynomial data in cell-local scaled coordinates.

    Drawing the coefficients identically across refinement levels makes the
    stability ratio exactly scale-invariant on geometrically similar cells,
    which is what the scaling argument behind the local projection bound
    predicts.
    """
    exps = monomial_exponents(dim, r + 1)
    p_coef = rng.uniform(-1, 1, size=(dim, exps.shape[0]))
    q_coefs = rng.uniform(-1, 1, size=(dim + 1, exps.shape[0]))
    center = np.asarray(center, dtype=float)

    def p(x):
        return eval_monomials(exps, (x - center) / scale) @ p_coef.T

    q = tuple(
        (lambda c: (lambda x: eval_monomials(exps, (x - center) / scale) @ c))(q_coefs[i])
        for i in range(dim + 1)
    )
    return LocalProjectionData(p=p, q=q)
