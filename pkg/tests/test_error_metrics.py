"""
Tests for the closed-form interpolation errors, the quadrature oracle and eta.
"""

import math

import numpy as np
import pytest

from anisomesh.core.exceptions import DegenerateTriangleError
from anisomesh.core.error_metrics import (
    QuadraticFunction,
    coefficient_of_variation,
    element_quality,
    eta_global,
    formula_check,
    h1_error_bank_smith,
    h1_error_edges,
    h1_error_thm21,
    l2_error_nadler,
    l2_error_nadler_printed,
    oracle_interp_error,
    random_triangle,
)
from anisomesh.core.fem import ProblemSpec, true_h1_error
from anisomesh.core.mesh import NodalScalarField, build_mesh, geometry_from_points, structured_unit_square
from anisomesh.core.tensor import NodalTensorField, SymTensor2, TensorRole

pytestmark = pytest.mark.unit

TWO_I = SymTensor2(2.0, 0.0, 2.0)
ZERO = SymTensor2(0.0, 0.0, 0.0)


class TestRightTriangle:
    def test_h1(self, right_triangle):
        geom = geometry_from_points(right_triangle)
        assert h1_error_edges(TWO_I, geom) == pytest.approx(1.0 / 3.0, rel=1e-14)
        assert h1_error_bank_smith(TWO_I, geom) == pytest.approx(1.0 / 3.0, rel=1e-14)
        assert h1_error_thm21(TWO_I, geom) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_l2(self, right_triangle):
        assert l2_error_nadler(TWO_I, geometry_from_points(right_triangle)) == pytest.approx(11.0 / 180.0, rel=1e-14)

    def test_printed_l2_disagrees(self, right_triangle):
        assert l2_error_nadler_printed(TWO_I, geometry_from_points(right_triangle)) == pytest.approx(7.0 / 30.0)

    def test_oracle(self, right_triangle):
        assert oracle_interp_error(TWO_I, right_triangle, "h1") == pytest.approx(1.0 / 3.0, abs=1e-14)
        assert oracle_interp_error(TWO_I, right_triangle, "l2") == pytest.approx(11.0 / 180.0, abs=1e-14)

    def test_zero_hessian(self, right_triangle):
        geom = geometry_from_points(right_triangle)
        for formula in (h1_error_edges, h1_error_bank_smith, l2_error_nadler):
            assert formula(ZERO, geom) == 0.0
        assert oracle_interp_error(ZERO, right_triangle, "h1") == 0.0
        assert oracle_interp_error(ZERO, right_triangle, "l2") == 0.0


class TestEquilateral:
    def test_h1(self, equilateral):
        value = h1_error_edges(SymTensor2.identity(), geometry_from_points(equilateral))
        assert value == pytest.approx(1.0 / (16.0 * math.sqrt(3.0)), rel=1e-13)
        assert oracle_interp_error(SymTensor2.identity(), equilateral, "h1") == pytest.approx(value, rel=1e-12)

    def test_l2(self, equilateral):
        value = l2_error_nadler(SymTensor2.identity(), geometry_from_points(equilateral))
        assert value == pytest.approx(math.sqrt(3.0) / 240.0, rel=1e-13)
        assert oracle_interp_error(SymTensor2.identity(), equilateral, "l2") == pytest.approx(value, rel=1e-12)


class TestAgreement:
    def test_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            h = SymTensor2.from_array(rng.normal(size=3))
            tri = random_triangle(rng, max_aspect=1e2)
            geom = geometry_from_points(tri)
            h1 = oracle_interp_error(h, tri, "h1")
            l2 = oracle_interp_error(h, tri, "l2")
            assert h1_error_edges(h, geom) == pytest.approx(h1, rel=1e-9)
            assert h1_error_bank_smith(h, geom) == pytest.approx(h1_error_edges(h, geom), rel=1e-9)
            assert l2_error_nadler(h, geom) == pytest.approx(l2, rel=1e-9)

    def test_formula_check(self):
        check = formula_check(50, seed=1, max_aspect=10.0)
        assert check.trials == 50
        assert check.h1_edges < 1e-9
        assert check.h1_bank_smith < 1e-9
        assert check.l2_nadler < 1e-9
        assert check.l2_nadler_printed > 1e-3
        assert set(check.to_dict()) == {"trials", "h1_edges", "h1_bank_smith", "l2_nadler", "l2_nadler_printed"}

    def test_scaling(self, right_triangle):
        geom = geometry_from_points(right_triangle)
        h = SymTensor2(1.0, 0.4, -2.0)
        scaled = SymTensor2.from_array(3.0 * h.as_array())
        assert h1_error_edges(scaled, geom) == pytest.approx(9.0 * h1_error_edges(h, geom), rel=1e-13)
        assert l2_error_nadler(scaled, geom) == pytest.approx(9.0 * l2_error_nadler(h, geom), rel=1e-13)

    def test_rigid_motion(self, right_triangle):
        theta = 1.1
        r = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        h = SymTensor2(1.0, 0.4, -2.0)
        moved = right_triangle @ r.T + np.array([3.0, -2.0])
        h_moved = SymTensor2.from_matrix(r @ h.matrix() @ r.T)
        assert h1_error_edges(h_moved, geometry_from_points(moved)) == pytest.approx(
            h1_error_edges(h, geometry_from_points(right_triangle)), rel=1e-12
        )
        assert l2_error_nadler(h_moved, geometry_from_points(moved)) == pytest.approx(
            l2_error_nadler(h, geometry_from_points(right_triangle)), rel=1e-12
        )

    def test_affine_part_is_irrelevant(self, right_triangle):
        mesh = build_mesh(right_triangle, [[0, 1, 2]])
        u = QuadraticFunction(TWO_I, linear=(3.0, -1.0), constant=5.0)
        problem = ProblemSpec(dirichlet={tag: u for tag in mesh.tag_set}, exact_gradient=u.gradient)
        interpolant = NodalScalarField.from_function(mesh, u)
        assert true_h1_error(interpolant, problem, mesh) ** 2 == pytest.approx(1.0 / 3.0, rel=1e-12)


class TestDegenerate:
    def test_collinear(self):
        flat = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]
        with pytest.raises(DegenerateTriangleError):
            h1_error_edges(TWO_I, geometry_from_points(flat))
        with pytest.raises(DegenerateTriangleError):
            oracle_interp_error(TWO_I, flat, "l2")

    def test_unknown_norm(self, right_triangle):
        with pytest.raises(ValueError):
            oracle_interp_error(TWO_I, right_triangle, "linf")


class TestEta:
    def test_single_element(self, right_triangle):
        mesh = build_mesh(right_triangle, [[0, 1, 2]])
        hessian = NodalTensorField(mesh, np.tile([2.0, 0.0, 2.0], (3, 1)))
        result = eta_global(hessian, mesh)
        assert result.eta == pytest.approx(math.sqrt(1.0 / 3.0), rel=1e-13)
        assert result.per_element.shape == (1,)

    def test_zero_field(self, square4):
        result = eta_global(NodalTensorField(square4, np.zeros((25, 3))), square4)
        assert result.eta == 0.0

    def test_matches_closed_form_per_element(self, square4):
        h = SymTensor2(3.0, -1.0, 0.5)
        result = eta_global(NodalTensorField(square4, np.tile(h.as_array(), (25, 1))), square4)
        expected = [h1_error_edges(h, geometry_from_points(square4.vertices[t])) for t in square4.triangles]
        np.testing.assert_allclose(result.per_element, expected, rtol=1e-12)

    def test_equals_true_error_of_quadratic_interpolant(self):
        mesh = structured_unit_square(6)
        u = QuadraticFunction(SymTensor2(4.0, 1.0, -2.0), linear=(0.5, 0.0))
        problem = ProblemSpec(
            dirichlet={tag: u for tag in (1, 2, 3, 4)},
            exact_gradient=u.gradient,
        )
        interpolant = NodalScalarField.from_function(mesh, u)
        hessian = NodalTensorField(mesh, np.tile(u.hessian.as_array(), (mesh.n_vertices, 1)), TensorRole.HESSIAN)
        assert eta_global(hessian, mesh).eta == pytest.approx(true_h1_error(interpolant, problem, mesh), rel=1e-10)


class TestStatistics:
    def test_coefficient_of_variation(self):
        assert coefficient_of_variation(np.array([2.0, 2.0, 2.0])) == 0.0
        assert coefficient_of_variation(np.zeros(4)) == 0.0
        assert coefficient_of_variation(np.array([1.0, 3.0])) == pytest.approx(0.5)

    def test_quality_of_equilateral_is_one(self, equilateral):
        mesh = build_mesh(equilateral, [[0, 1, 2]])
        metric = NodalTensorField(mesh, np.tile([5.0, 0.0, 5.0], (3, 1)), TensorRole.METRIC)
        assert element_quality(mesh, metric)[0] == pytest.approx(1.0, rel=1e-12)
