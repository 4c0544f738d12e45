import math

import numpy as np
import pytest

from rtmixed.mesh import SimplicialMesh, build_unit_square_mesh
from rtmixed.quadrature import MAX_DEGREE, integrate_on_cell, simplex_rule
from rtmixed.spaces import monomial_exponents


def exact_simplex_monomial(alpha):
    """int over the unit d-simplex of x^alpha = prod(alpha_i!) / (|alpha| + d)!."""
    d = len(alpha)
    num = 1
    for a in alpha:
        num *= math.factorial(a)
    return num / math.factorial(sum(alpha) + d)


@pytest.mark.parametrize("dim", [2, 3])
def test_monomial_exactness(dim):
    for degree in list(range(11)) + [14]:
        rule = simplex_rule(dim, degree)
        assert np.all(rule.weights > 0)
        for alpha in monomial_exponents(dim, degree):
            approx = float(rule.weights @ np.prod(rule.points**alpha, axis=1))
            exact = exact_simplex_monomial(alpha)
            assert abs(approx - exact) < 1e-13 * abs(exact)


@pytest.mark.parametrize("dim", [2, 3])
def test_weight_sum_is_reference_measure(dim):
    measure = 0.5 if dim == 2 else 1.0 / 6.0
    for degree in (0, 3, 8):
        assert simplex_rule(dim, degree).weights.sum() == pytest.approx(measure, rel=1e-14)


def test_spec_values():
    rule = simplex_rule(2, 0)
    assert rule.weights.sum() == pytest.approx(0.5)  # integral of 1
    rule = simplex_rule(2, 1)
    assert float(rule.weights @ rule.points[:, 0]) == pytest.approx(1.0 / 6.0, rel=1e-14)
    rule = simplex_rule(3, 2)
    xy = rule.points[:, 0] * rule.points[:, 1]
    assert float(rule.weights @ xy) == pytest.approx(1.0 / 120.0, rel=1e-13)


def test_determinism():
    a = simplex_rule(2, 5)
    b = simplex_rule(2, 5)
    assert a is b or (np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights))


def test_invalid_arguments():
    with pytest.raises(ValueError):
        simplex_rule(4, 2)
    with pytest.raises(ValueError):
        simplex_rule(2, -1)
    with pytest.raises(ValueError):
        simplex_rule(2, MAX_DEGREE + 1)


def test_integrate_on_cell_basics():
    mesh = build_unit_square_mesh(2)
    rule = simplex_rule(2, 2)
    for c in range(mesh.n_cells):
        val = integrate_on_cell(mesh, c, lambda x: np.ones(len(x)), rule)
        assert val == pytest.approx(mesh.cell_measures[c], rel=1e-14)

    ref = SimplicialMesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), [[0, 1, 2]])
    val = integrate_on_cell(ref, 0, lambda x: x[:, 0], simplex_rule(2, 2))
    assert val == pytest.approx(1.0 / 6.0, rel=1e-14)


def test_integrate_product_over_mesh():
    mesh = build_unit_square_mesh(4)
    rule = simplex_rule(2, 6)
    total = sum(
        integrate_on_cell(mesh, c, lambda x: x[:, 0] ** 2 * x[:, 1] ** 2, rule)
        for c in range(mesh.n_cells)
    )
    assert total == pytest.approx(1.0 / 9.0, rel=1e-13)


def test_affine_invariance():
    # integrating f over K equals det-weighted integration of f . T_K on the
    # reference simplex
    mesh = build_unit_square_mesh(3)
    rule = simplex_rule(2, 4)
    f = lambda x: np.sin(x[:, 0]) * (1 + x[:, 1] ** 2)
    c = 7
    direct = integrate_on_cell(mesh, c, f, rule)
    pullback = mesh.det_B[c] * float(rule.weights @ f(mesh.map_points(c, rule.points)))
    assert direct == pytest.approx(pullback, rel=1e-15)


def test_rule_dimension_mismatch():
    mesh = build_unit_square_mesh(2)
    with pytest.raises(ValueError):
        integrate_on_cell(mesh, 0, lambda x: np.ones(len(x)), simplex_rule(3, 2))
