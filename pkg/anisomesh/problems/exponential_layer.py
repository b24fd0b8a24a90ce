"""
Exponential Layer - Poisson problem with a layer of width 1/alpha along x = 0.

u = [1 - e^{-alpha x} - (1 - e^{-alpha}) x] * 4 y (1 - y), zero on the whole boundary.
"""

import math

import numpy as np

from ..core.fem import ProblemSpec
from .base import BenchmarkProblem, zero


class ExponentialLayerProblem(BenchmarkProblem):
    example_id = "ex2"
    title = "Poisson exponential layer"
    parameter = "alpha"
    default = 1000.0
    studied = (1000.0,)

    def _build(self, alpha: float) -> ProblemSpec:
        slope = -math.expm1(-alpha)

        def factors(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            e = np.exp(-alpha * x)
            X = 1.0 - e - slope * x
            Y = 4.0 * y * (1.0 - y)
            return e, X, Y, x, y

        def solution(x, y):
            _, X, Y, _, _ = factors(x, y)
            return X * Y

        def gradient(x, y):
            e, X, Y, _, y = factors(x, y)
            return (alpha * e - slope) * Y, X * (4.0 - 8.0 * y)

        def hessian(x, y):
            e, X, Y, _, y = factors(x, y)
            return -alpha * alpha * e * Y, (alpha * e - slope) * (4.0 - 8.0 * y), -8.0 * X

        def source(x, y):
            e, X, Y, _, _ = factors(x, y)
            return alpha * alpha * e * Y + 8.0 * X

        return ProblemSpec(
            kappa=1.0,
            source=source,
            dirichlet={1: zero, 2: zero, 3: zero, 4: zero},
            exact_solution=solution,
            exact_gradient=gradient,
            exact_hessian=hessian,
            name=f"{self.example_id}(alpha={alpha:g})",
        )
