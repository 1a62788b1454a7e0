"""Mesh construction, Legendre evaluation, and Gauss quadrature checks."""

import numpy as np
import pytest

from wgburgers import Mesh, build_uniform_mesh, gauss_rule, legendre_deriv, legendre_eval, map_to_element
from wgburgers.quadrature import RefPoly, legendre_table


def test_single_element_mesh():
    mesh = build_uniform_mesh(1)
    assert mesh.nodes.tolist() == [0.0, 1.0]
    assert mesh.n_elements == 1


def test_uniform_mesh_80_spacing():
    mesh = build_uniform_mesh(80)
    assert np.allclose(mesh.element_sizes, 0.0125, rtol=0, atol=1e-15)
    assert mesh.h == pytest.approx(0.0125, abs=1e-15)


def test_uniform_mesh_4_nodes():
    mesh = build_uniform_mesh(4)
    assert np.allclose(mesh.nodes, [0.0, 0.25, 0.5, 0.75, 1.0], rtol=0, atol=0)


@pytest.mark.parametrize("bad", [0, -3])
def test_mesh_rejects_nonpositive_count(bad):
    with pytest.raises(ValueError):
        build_uniform_mesh(bad)


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh([0.0, 0.5])  # does not end at 1
    with pytest.raises(ValueError):
        Mesh([0.0, 0.6, 0.5, 1.0])  # not increasing
    with pytest.raises(ValueError):
        Mesh([0.1, 1.0])  # does not start at 0


def test_mesh_partitions_unit_interval():
    mesh = Mesh([0.0, 0.15, 0.4, 0.75, 1.0])
    assert np.all(mesh.element_sizes > 0)
    assert abs(mesh.element_sizes.sum() - 1.0) <= 1e-14


def test_map_to_element_midpoint_and_endpoints():
    mesh = build_uniform_mesh(4)
    assert map_to_element(mesh, 0, 0.0) == pytest.approx(0.125, abs=1e-16)
    for i in range(mesh.n_elements):
        a, b = mesh.element(i)
        assert map_to_element(mesh, i, -1.0) == a
        assert map_to_element(mesh, i, 1.0) == b
        assert mesh.jacobian(i) == pytest.approx((b - a) / 2)
    with pytest.raises(ValueError):
        map_to_element(mesh, 4, 0.0)
    with pytest.raises(ValueError):
        map_to_element(mesh, 0, 1.5)


def test_element_containing_resolves_ties_left():
    mesh = build_uniform_mesh(4)
    assert mesh.element_containing(0.25) == 0
    assert mesh.element_containing(0.3) == 1
    assert mesh.element_containing(0.0) == 0
    assert mesh.element_containing(1.0) == 3


# --- Gauss rules ---------------------------------------------------------


def test_midpoint_rule():
    rule = gauss_rule(1)
    assert rule.points.tolist() == [0.0]
    assert rule.weights.tolist() == [2.0]


def test_two_point_rule_against_moment_equations():
    # oracle: a symmetric 2-point rule exact through degree 3 must satisfy
    # the moment equations for t^0..t^3, which force points +-1/sqrt(3), weights 1
    rule = gauss_rule(2)
    for m in range(4):
        exact = 2.0 / (m + 1) if m % 2 == 0 else 0.0
        assert rule.integrate(lambda t, m=m: t**m) == pytest.approx(exact, abs=1e-15)
    assert np.allclose(np.sort(rule.points), [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    assert np.allclose(rule.weights, [1.0, 1.0], atol=1e-15)


def test_three_point_rule_integrates_quartic():
    rule = gauss_rule(3)
    assert abs(rule.integrate(lambda t: t**4) - 2.0 / 5.0) <= 1e-14


@pytest.mark.parametrize("n", range(1, 17))
def test_rules_exact_through_2n_minus_1(n):
    rule = gauss_rule(n)
    assert rule.exact_degree == 2 * n - 1
    assert abs(rule.weights.sum() - 2.0) <= 1e-14
    assert np.all(rule.weights > 0)
    assert np.all(np.abs(rule.points) <= 1.0)
    for m in range(rule.exact_degree + 1):
        exact = 2.0 / (m + 1) if m % 2 == 0 else 0.0
        assert abs(rule.integrate(lambda t, m=m: t**m) - exact) <= 1e-13


@pytest.mark.parametrize("bad", [0, 65, -1])
def test_rule_rejects_out_of_range_counts(bad):
    with pytest.raises(ValueError):
        gauss_rule(bad)


def test_integrate_on_mapped_interval():
    rule = gauss_rule(4)
    assert rule.integrate_on(lambda x: x**2, 0.0, 1.0) == pytest.approx(1 / 3, abs=1e-15)


# --- Legendre polynomials ------------------------------------------------


def test_legendre_low_degrees():
    assert legendre_eval(0, -0.3) == 1.0
    assert legendre_eval(1, 0.5) == 0.5
    assert legendre_eval(2, 0.5) == pytest.approx(-0.125, abs=1e-16)


def test_legendre_matches_explicit_formulas():
    t = np.linspace(-1, 1, 17)
    explicit = [
        np.ones_like(t),
        t,
        (3 * t**2 - 1) / 2,
        (5 * t**3 - 3 * t) / 2,
        (35 * t**4 - 30 * t**2 + 3) / 8,
    ]
    for degree, reference in enumerate(explicit):
        assert np.max(np.abs(legendre_eval(degree, t) - reference)) <= 1e-14


def test_legendre_against_numpy_implementation():
    t = np.linspace(-1, 1, 23)
    for degree in range(9):
        coeffs = np.zeros(degree + 1)
        coeffs[-1] = 1.0
        reference = np.polynomial.legendre.legval(t, coeffs)
        assert np.max(np.abs(legendre_eval(degree, t) - reference)) <= 1e-13


def test_legendre_derivative_consistent_with_differences():
    t = np.linspace(-0.95, 0.95, 13)
    delta = 1e-6
    for degree in range(7):
        numeric = (legendre_eval(degree, t + delta) - legendre_eval(degree, t - delta)) / (2 * delta)
        assert np.max(np.abs(legendre_deriv(degree, t) - numeric)) <= 1e-7


def test_legendre_rejects_negative_degree():
    with pytest.raises(ValueError):
        legendre_eval(-1, 0.0)
    with pytest.raises(ValueError):
        legendre_deriv(-2, 0.0)


def test_legendre_orthogonality():
    rule = gauss_rule(10)
    table = legendre_table(6, rule.points)
    for i in range(7):
        for j in range(7):
            value = float(rule.weights @ (table[i] * table[j]))
            expected = 2.0 / (2 * i + 1) if i == j else 0.0
            assert abs(value - expected) <= 1e-13


def test_refpoly_evaluation():
    p = RefPoly([1.0, 2.0, -0.5])  # P0 + 2 P1 - 0.5 P2
    t = 0.3
    expected = 1.0 + 2 * t - 0.5 * (3 * t**2 - 1) / 2
    assert p(t) == pytest.approx(expected, abs=1e-15)
    assert p.degree == 2
    values = p(np.array([-1.0, 0.0, 1.0]))
    assert values.shape == (3,)
