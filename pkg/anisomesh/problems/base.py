"""
Benchmark Problem - Common interface of the unit-square benchmark problems.
"""

from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np

from ..core.exceptions import ProblemError
from ..core.fem import ProblemSpec


def zero(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.zeros_like(np.asarray(x, dtype=float))


def one(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.ones_like(np.asarray(x, dtype=float))


class BenchmarkProblem(ABC):
    """A problem on (0,1)^2 with a closed-form solution and one shape parameter.

    Boundary tags follow ``structured_unit_square``: 1 bottom, 2 right,
    3 top, 4 left.
    """

    example_id: str = ""
    title: str = ""
    parameter: str = ""
    default: float = 0.0
    studied: tuple = ()

    def resolve(self, value: Optional[float] = None) -> float:
        """The parameter value to use, defaulting and range-checking."""
        value = self.default if value is None else float(value)
        if not np.isfinite(value):
            raise ProblemError(f"{self.parameter} must be finite, got {value}")
        self.check(value)
        return value

    def check(self, value: float) -> None:
        if value <= 0.0:
            raise ProblemError(f"{self.parameter} must be positive, got {value}")

    def build(self, value: Optional[float] = None) -> ProblemSpec:
        """ProblemSpec with the exact solution, gradient and Hessian wired in."""
        return self._build(self.resolve(value))

    @abstractmethod
    def _build(self, value: float) -> ProblemSpec:
        ...

    def describe(self) -> Dict[str, object]:
        return {
            "id": self.example_id,
            "title": self.title,
            "parameter": self.parameter,
            "default": self.default,
            "studied": list(self.studied),
        }
