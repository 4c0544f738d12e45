"""Quadrature rules on reference simplices.

Rules are conical products (collapsed Gauss-Jacobi): the unit triangle and
tetrahedron are mapped to a tensor-product cube, with Jacobi weights absorbing
the collapse Jacobian.  This yields positive weights and exactness for any
requested polynomial degree, at n^d points for degree 2n-1.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 20

#: measure of the unit reference simplex per dimension (1/d!)
REFERENCE_MEASURE = {1: 1.0, 2: 0.5, 3: 1.0 / 6.0}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points and weights on the reference simplex of dimension ``dim``.

    Integrates every polynomial of total degree <= ``degree`` exactly; the
    weights are positive and sum to the reference-simplex measure.
    """

    dim: int
    degree: int
    points: np.ndarray  # (n, dim)
    weights: np.ndarray  # (n,)

    @property
    def n_points(self):
        return self.weights.shape[0]


def _gauss01(n):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _jacobi01(n, alpha):
    """Gauss-Jacobi nodes/weights on [0, 1] for the weight (1-x)^alpha."""
    x, w = roots_jacobi(n, alpha, 0.0)
    return (x + 1.0) / 2.0, w * 0.5 ** (alpha + 1.0)


def interval_rule(degree):
    """Gauss-Legendre rule on the unit interval, exact through ``degree``."""
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"interval rule degree must be in [0, {MAX_DEGREE}], got {degree}")
    n = degree // 2 + 1
    x, w = _gauss01(n)
    return QuadratureRule(1, degree, x.reshape(-1, 1), w)


_CACHE = {}


def simplex_rule(dim, degree):
    """Conical-product rule on the reference simplex of dimension ``dim``.

    Parameters
    ----------
    dim : int
        2 (triangle) or 3 (tetrahedron).
    degree : int
        Requested polynomial exactness, 0 <= degree <= MAX_DEGREE.
    """
    if dim not in (2, 3):
        raise ValueError(f"simplex rules exist for dim 2 and 3, got {dim}")
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"rule degree must be in [0, {MAX_DEGREE}], got {degree}")
    key = (dim, degree)
    if key in _CACHE:
        return _CACHE[key]

    n = degree // 2 + 1
    a, wa = _gauss01(n)
    b, wb = _jacobi01(n, 1.0)
    if dim == 2:
        # x = a (1-b), y = b; Jacobian (1-b) absorbed into the Jacobi weight
        A, B = np.meshgrid(a, b, indexing="ij")
        WA, WB = np.meshgrid(wa, wb, indexing="ij")
        pts = np.column_stack([(A * (1.0 - B)).ravel(), B.ravel()])
        wts = (WA * WB).ravel()
    else:
        c, wc = _jacobi01(n, 2.0)
        A, B, C = np.meshgrid(a, b, c, indexing="ij")
        WA, WB, WC = np.meshgrid(wa, wb, wc, indexing="ij")
        pts = np.column_stack(
            [
                (A * (1.0 - B) * (1.0 - C)).ravel(),
                (B * (1.0 - C)).ravel(),
                C.ravel(),
            ]
        )
        wts = (WA * WB * WC).ravel()
    rule = QuadratureRule(dim, degree, pts, wts)
    _CACHE[key] = rule
    return rule


def face_rule(dim, degree):
    """Rule on the reference face simplex of a ``dim``-dimensional cell."""
    if dim == 2:
        return interval_rule(degree)
    if dim == 3:
        return simplex_rule(2, degree)
    raise ValueError(f"face rules exist for dim 2 and 3, got {dim}")


def integrate_on_cell(mesh, cell, f, rule):
    """Integrate the pointwise function ``f`` over one mesh cell.

    ``f`` receives physical coordinates of shape (n, dim) and must return
    values of shape (n,).
    """
    if rule.dim != mesh.dim:
        raise ValueError(f"rule dimension {rule.dim} does not match mesh dimension {mesh.dim}")
    x = mesh.map_points(cell, rule.points)
    return mesh.det_B[cell] * float(rule.weights @ np.asarray(f(x), dtype=float))
