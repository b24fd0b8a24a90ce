"""
Tests for the benchmark problem catalogue.
"""

import numpy as np
import pytest

from anisomesh.core.exceptions import ProblemError
from anisomesh.problems import PROBLEMS, build_problem, get_problem

pytestmark = pytest.mark.unit

STEP = 1e-4


def laplacian(u, x, y):
    return (u(x + STEP, y) + u(x - STEP, y) + u(x, y + STEP) + u(x, y - STEP) - 4.0 * u(x, y)) / STEP ** 2


def test_catalogue():
    assert set(PROBLEMS) == {"ex1", "ex2", "ex3"}
    assert get_problem("ex1").default == 0.0015
    assert get_problem("ex2").default == 1000.0
    assert get_problem("ex3").default == 40.0
    assert get_problem("ex3").studied == (5.0, 10.0, 20.0, 40.0)


def test_unknown_example():
    with pytest.raises(ProblemError, match="ex4"):
        get_problem("ex4")


@pytest.mark.parametrize("example, value", [("ex1", 0.0), ("ex2", -3.0), ("ex3", 1.5), ("ex2", float("inf"))])
def test_invalid_parameter(example, value):
    with pytest.raises(ProblemError):
        build_problem(example, value)


def test_names_carry_parameter():
    assert build_problem("ex1").name == "ex1(kappa=0.0015)"
    assert build_problem("ex3", 5).name == "ex3(beta=5)"


def test_describe():
    info = get_problem("ex3").describe()
    assert info["parameter"] == "beta"
    assert info["studied"] == [5.0, 10.0, 20.0, 40.0]


class TestConvectionLayer:
    def test_boundary_values(self):
        problem = build_problem("ex1")
        y = np.linspace(0.0, 1.0, 5)
        np.testing.assert_allclose(problem.exact_solution(np.zeros(5), y), 0.0, atol=1e-15)
        np.testing.assert_allclose(problem.exact_solution(np.ones(5), y), 1.0)
        np.testing.assert_allclose(problem.dirichlet[2](np.ones(5), y), 1.0)
        np.testing.assert_allclose(problem.dirichlet[4](np.zeros(5), y), 0.0)
        assert set(problem.neumann) == {1, 3}
        assert problem.convection == (1.0, 0.0)

    def test_equation_residual(self):
        # kappa large enough for finite differences to resolve the layer
        problem = build_problem("ex1", 0.2)
        x = np.array([0.3, 0.6, 0.9])
        y = np.array([0.5, 0.2, 0.7])
        ux, _ = problem.exact_gradient(x, y)
        lap = laplacian(problem.exact_solution, x, y)
        np.testing.assert_allclose(-0.2 * lap + ux, 0.0, atol=1e-5)

    def test_no_overflow_at_default_kappa(self):
        problem = build_problem("ex1")
        values = problem.exact_solution(np.linspace(0.0, 1.0, 101), np.zeros(101))
        assert np.all(np.isfinite(values))
        assert np.all(np.diff(values) >= 0.0)


class TestExponentialLayer:
    def test_zero_on_boundary(self):
        problem = build_problem("ex2")
        s = np.linspace(0.0, 1.0, 7)
        for x, y in ((s, 0.0 * s), (s, 0.0 * s + 1.0), (0.0 * s, s), (0.0 * s + 1.0, s)):
            np.testing.assert_allclose(problem.exact_solution(x, y), 0.0, atol=1e-14)
        assert set(problem.dirichlet) == {1, 2, 3, 4}

    def test_source_is_minus_laplacian(self):
        problem = build_problem("ex2", 5.0)
        x = np.array([0.2, 0.5, 0.8])
        y = np.array([0.3, 0.5, 0.6])
        np.testing.assert_allclose(problem.source(x, y), -laplacian(problem.exact_solution, x, y), rtol=1e-5)

    def test_hessian_matches_source(self):
        problem = build_problem("ex2")
        x = np.array([0.001, 0.01, 0.5])
        y = np.array([0.4, 0.5, 0.9])
        uxx, _, uyy = problem.exact_hessian(x, y)
        np.testing.assert_allclose(problem.source(x, y), -(uxx + uyy), rtol=1e-12)


class TestCornerLayers:
    @pytest.mark.parametrize("beta", [5.0, 10.0, 20.0, 40.0])
    def test_boundary_conditions(self, beta):
        problem = build_problem("ex3", beta)
        s = np.linspace(0.0, 1.0, 9)
        np.testing.assert_allclose(problem.exact_solution(np.ones(9), s), 0.0)
        np.testing.assert_allclose(problem.exact_solution(s, np.ones(9)), 0.0)
        ux, _ = problem.exact_gradient(np.zeros(9), s)
        _, uy = problem.exact_gradient(s, np.zeros(9))
        np.testing.assert_allclose(ux, 0.0)
        np.testing.assert_allclose(uy, 0.0)
        assert set(problem.dirichlet) == {2, 3}
        assert set(problem.neumann) == {1, 4}

    def test_source_is_minus_laplacian(self):
        problem = build_problem("ex3", 5.0)
        x = np.array([0.3, 0.7, 0.9])
        y = np.array([0.4, 0.6, 0.8])
        np.testing.assert_allclose(problem.source(x, y), -laplacian(problem.exact_solution, x, y), rtol=1e-4)

    def test_any_beta_at_least_two(self):
        assert build_problem("ex3", 2.0).name == "ex3(beta=2)"
