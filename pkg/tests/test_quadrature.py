import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import legendre
from scipy.integrate import romb

from pgvarmion.errors import InvalidArgumentError
from pgvarmion.quadrature import (MAX_GL_POINTS, QuadratureRule, boundary_rule_1d,
                                  boundary_rule_2d, gauss_legendre, integrate,
                                  rule_from_descriptor, tensor_gauss_legendre,
                                  uniform_interior_grid_2d)


class TestGaussLegendreNodes:
    def test_one_point_is_midpoint(self):
        r = gauss_legendre(1)
        np.testing.assert_allclose(r.nodes, [0.5])
        np.testing.assert_allclose(r.weights, [1.0])

    def test_two_point_rule(self):
        r = gauss_legendre(2)
        ref = 0.5 + np.array([-1.0, 1.0]) / (2.0 * np.sqrt(3.0))
        np.testing.assert_allclose(r.nodes, ref, atol=1e-15)
        np.testing.assert_allclose(r.weights, [0.5, 0.5], atol=1e-15)

    def test_matches_reference_root_finder(self):
        # independent oracle: numpy's Golub-Welsch style leggauss
        for n in (3, 7, 16, 40, 64, 128, 200, 400, 1024):
            x_ref, w_ref = legendre.leggauss(n)
            r = gauss_legendre(n, (-1.0, 1.0))
            np.testing.assert_allclose(r.nodes, x_ref, atol=5e-15)
            # edge weights at large n are ~1e-5 and carry ~1e-9 relative
            # disagreement between equally valid double evaluations
            np.testing.assert_allclose(r.weights, w_ref, atol=2.5e-14, rtol=2e-9)

    def test_nodes_interior_weights_positive(self):
        for n in (1, 2, 17, 40, 200):
            r = gauss_legendre(n)
            assert np.all(r.nodes > 0.0) and np.all(r.nodes < 1.0)
            assert np.all(r.weights > 0.0)

    def test_weights_sum_to_measure(self):
        for n in (1, 5, 40, 200):
            r = gauss_legendre(n, (-2.0, 3.5))
            np.testing.assert_allclose(np.sum(r.weights), 5.5, rtol=1e-14)

    def test_n_bounds_enforced(self):
        with pytest.raises(InvalidArgumentError):
            gauss_legendre(0)
        with pytest.raises(InvalidArgumentError):
            gauss_legendre(MAX_GL_POINTS + 1)
        with pytest.raises(InvalidArgumentError):
            gauss_legendre(3, (1.0, 1.0))


class TestDegreeExactness:
    def test_x_squared_with_two_points(self):
        r = gauss_legendre(2)
        np.testing.assert_allclose(r.integrate(r.nodes**2), 1.0 / 3.0, rtol=1e-15)

    def test_random_polynomials(self):
        # degree 2n-1 must integrate exactly
        rng = np.random.default_rng(1234)
        for n in (1, 2, 3, 5, 8, 20, 50):
            r = gauss_legendre(n)
            for _ in range(5):
                coeffs = rng.uniform(-1.0, 1.0, size=2 * n)
                exact = np.sum(coeffs / np.arange(1, 2 * n + 1))
                got = r.integrate(np.polynomial.polynomial.polyval(r.nodes, coeffs))
                np.testing.assert_allclose(got, exact, rtol=1e-12, atol=1e-13)

    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_exactness_property(self, n, seed):
        rng = np.random.default_rng(seed)
        coeffs = rng.uniform(-2.0, 2.0, size=2 * n)
        r = gauss_legendre(n)
        exact = np.sum(coeffs / np.arange(1, 2 * n + 1))
        got = r.integrate(np.polynomial.polynomial.polyval(r.nodes, coeffs))
        assert abs(got - exact) <= 1e-12 * max(1.0, abs(exact))

    def test_affine_invariance(self):
        # integral of f((x-a)/(b-a)) over [a,b] equals (b-a) * integral over [0,1]
        f = lambda t: np.sin(3 * np.pi * t) + t**3
        a, b = -1.5, 2.0
        r01 = gauss_legendre(31)
        rab = gauss_legendre(31, (a, b))
        lhs = rab.integrate(f((rab.nodes - a) / (b - a)))
        rhs = (b - a) * r01.integrate(f(r01.nodes))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-13)


class TestConvergenceAgainstTrapezoid:
    def test_gl40_agrees_with_converged_trapezoid_ladder(self):
        # ten-mode forcing-style integrand; the trapezoid ladder is Romberg
        # (composite trapezoid plus Richardson), converged far past 1e-10
        rng = np.random.default_rng(7)
        a = rng.uniform(-2, 2, 10)
        b = rng.uniform(-1, 1, 10)

        def f(x):
            j = np.arange(1, 11)
            return np.sin(np.outer(x, j) * np.pi + b) @ a

        r = gauss_legendre(40)
        gl_val = r.integrate(f(r.nodes))
        xs = np.linspace(0.0, 1.0, 2**16 + 1)
        ladder_val = romb(f(xs), dx=xs[1] - xs[0])
        assert abs(gl_val - ladder_val) < 1e-10
        # a bare 40-point trapezoid is orders of magnitude worse
        xt = np.linspace(0.0, 1.0, 40)
        trap_val = np.trapezoid(f(xt), xt)
        assert abs(trap_val - ladder_val) > 1e-5


class TestTensorRule:
    def test_weights_sum_to_area(self):
        r = tensor_gauss_legendre(40, 40)
        np.testing.assert_allclose(np.sum(r.weights), 1.0, rtol=1e-13)
        assert r.n_points == 1600
        assert r.nodes.shape == (1600, 2)

    def test_row_major_x_slowest(self):
        r = tensor_gauss_legendre(3, 4)
        # first 4 nodes share the smallest x
        assert np.allclose(r.nodes[:4, 0], r.nodes[0, 0])
        assert np.all(np.diff(r.nodes[:4, 1]) > 0)

    def test_separable_exactness(self):
        r = tensor_gauss_legendre(6, 6)
        vals = (r.nodes[:, 0]**3) * (r.nodes[:, 1]**5)
        np.testing.assert_allclose(r.integrate(vals), (1.0 / 4.0) * (1.0 / 6.0), rtol=1e-13)

    def test_trig_mass_entry(self):
        # 40x40 resolves products of modes up to 10 per dim
        r = tensor_gauss_legendre(40, 40)
        phi = 2.0 * np.sin(10 * np.pi * r.nodes[:, 0]) * np.sin(10 * np.pi * r.nodes[:, 1])
        np.testing.assert_allclose(r.integrate(phi * phi), 1.0, atol=1e-13)


class TestUniformGrid:
    def test_interior_and_equal_weights(self):
        r = uniform_interior_grid_2d(67)
        assert r.n_points == 67 * 67
        assert np.all(r.nodes > 0.0) and np.all(r.nodes < 1.0)
        np.testing.assert_allclose(r.weights, 1.0 / (67 * 67))

    def test_norm_of_constant(self):
        r = uniform_interior_grid_2d(10)
        np.testing.assert_allclose(r.norm(np.ones(r.n_points)), 1.0, rtol=1e-14)


class TestBoundaryRules:
    def test_endpoints_1d(self):
        r = boundary_rule_1d()
        np.testing.assert_allclose(r.nodes, [0.0, 1.0])
        np.testing.assert_allclose(r.weights, [1.0, 1.0])
        # flux integral over the two-point boundary is a plain sum
        eta = np.array([2.0, -3.0])
        np.testing.assert_allclose(r.integrate(eta), -1.0)

    def test_edges_2d(self):
        r = boundary_rule_2d(8)
        np.testing.assert_allclose(np.sum(r.weights), 4.0, rtol=1e-14)
        on_edge = (np.isclose(r.nodes[:, 0], 0) | np.isclose(r.nodes[:, 0], 1)
                   | np.isclose(r.nodes[:, 1], 0) | np.isclose(r.nodes[:, 1], 1))
        assert np.all(on_edge)

    def test_single_edge(self):
        r = boundary_rule_2d(5, edges=("right",))
        assert np.allclose(r.nodes[:, 0], 1.0)
        np.testing.assert_allclose(np.sum(r.weights), 1.0, rtol=1e-14)
        vals = r.nodes[:, 1]**2
        np.testing.assert_allclose(r.integrate(vals), 1.0 / 3.0, rtol=1e-13)


class TestRuleUtilities:
    def test_integrate_callable(self):
        val = integrate(lambda x: np.exp(x), gauss_legendre(20))
        np.testing.assert_allclose(val, np.e - 1.0, rtol=1e-14)

    def test_descriptor_round_trip(self):
        rules = [gauss_legendre(17, (0.0, 2.0)),
                 tensor_gauss_legendre(5, 7),
                 uniform_interior_grid_2d(9),
                 boundary_rule_1d(),
                 boundary_rule_2d(4, edges=("top", "left"))]
        for r in rules:
            r2 = rule_from_descriptor(r.descriptor())
            np.testing.assert_array_equal(r.nodes, r2.nodes)
            np.testing.assert_array_equal(r.weights, r2.weights)

    def test_rule_is_immutable(self):
        r = gauss_legendre(4)
        with pytest.raises(ValueError):
            r.nodes[0] = 0.3

    def test_integrate_shape_guard(self):
        r = gauss_legendre(4)
        with pytest.raises(InvalidArgumentError):
            r.integrate(np.ones(5))
