"""
Convection Layer - Steady convection-diffusion with an exponential layer at x = 1.

    -kappa lap(u) + du/dx = 0,  u = 0 on x = 0,  u = 1 on x = 1,
    du/dn = 0 on y = 0 and y = 1.

The solution depends on x only and has a layer of width kappa at the outflow.
"""

import math

import numpy as np

from ..core.fem import ProblemSpec
from .base import BenchmarkProblem, one, zero


class ConvectionLayerProblem(BenchmarkProblem):
    example_id = "ex1"
    title = "Convection-diffusion boundary layer"
    parameter = "kappa"
    default = 0.0015
    studied = (0.0015,)

    def _build(self, kappa: float) -> ProblemSpec:
        # (1 - e^{x/k}) / (1 - e^{1/k}) rewritten with non-positive exponents
        tail = math.exp(-1.0 / kappa)
        denom = -math.expm1(-1.0 / kappa)

        def solution(x, y):
            x = np.asarray(x, dtype=float)
            return (np.exp((x - 1.0) / kappa) - tail) / denom + 0.0 * np.asarray(y, dtype=float)

        def gradient(x, y):
            x = np.asarray(x, dtype=float)
            ux = np.exp((x - 1.0) / kappa) / (kappa * denom)
            return ux, np.zeros_like(ux + 0.0 * np.asarray(y, dtype=float))

        def hessian(x, y):
            ux, zeros = gradient(x, y)
            return ux / kappa, zeros, zeros

        return ProblemSpec(
            kappa=kappa,
            convection=(1.0, 0.0),
            source=zero,
            dirichlet={2: one, 4: zero},
            neumann=(1, 3),
            exact_solution=solution,
            exact_gradient=gradient,
            exact_hessian=hessian,
            name=f"{self.example_id}(kappa={kappa:g})",
        )
