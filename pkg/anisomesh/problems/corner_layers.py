"""
Corner Layers - Poisson problem with layers of different strength along x = 1 and y = 1.

u = (1 - x^beta)(1 - y^{2 beta}); u = 0 on x = 1 and y = 1, du/dn = 0 on
x = 0 and y = 0. Larger beta gives thinner and more anisotropic layers.
"""

import numpy as np

from ..core.exceptions import ProblemError
from ..core.fem import ProblemSpec
from .base import BenchmarkProblem, zero


class CornerLayersProblem(BenchmarkProblem):
    example_id = "ex3"
    title = "Poisson corner layers"
    parameter = "beta"
    default = 40.0
    studied = (5.0, 10.0, 20.0, 40.0)

    def check(self, value: float) -> None:
        # The Hessian holds x^(beta-2), unbounded at x = 0 below 2
        if value < 2.0:
            raise ProblemError(f"beta must be at least 2, got {value}")

    def _build(self, beta: float) -> ProblemSpec:
        b2 = 2.0 * beta

        def solution(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            return (1.0 - x ** beta) * (1.0 - y ** b2)

        def gradient(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            ux = -beta * x ** (beta - 1.0) * (1.0 - y ** b2)
            uy = -b2 * y ** (b2 - 1.0) * (1.0 - x ** beta)
            return ux, uy

        def hessian(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            uxx = -beta * (beta - 1.0) * x ** (beta - 2.0) * (1.0 - y ** b2)
            uyy = -b2 * (b2 - 1.0) * y ** (b2 - 2.0) * (1.0 - x ** beta)
            uxy = beta * b2 * x ** (beta - 1.0) * y ** (b2 - 1.0)
            return uxx, uxy, uyy

        def source(x, y):
            uxx, _, uyy = hessian(x, y)
            return -(uxx + uyy)

        return ProblemSpec(
            kappa=1.0,
            source=source,
            dirichlet={2: zero, 3: zero},
            neumann=(1, 4),
            exact_solution=solution,
            exact_gradient=gradient,
            exact_hessian=hessian,
            name=f"{self.example_id}(beta={beta:g})",
        )
