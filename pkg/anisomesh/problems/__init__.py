"""
Problems - Benchmark problems on the unit square.
"""

from typing import Dict, Optional

from ..core.exceptions import ProblemError
from ..core.fem import ProblemSpec
from .base import BenchmarkProblem
from .convection_layer import ConvectionLayerProblem
from .corner_layers import CornerLayersProblem
from .exponential_layer import ExponentialLayerProblem

PROBLEMS: Dict[str, BenchmarkProblem] = {
    p.example_id: p
    for p in (ConvectionLayerProblem(), ExponentialLayerProblem(), CornerLayersProblem())
}


def get_problem(example_id: str) -> BenchmarkProblem:
    try:
        return PROBLEMS[example_id]
    except KeyError:
        raise ProblemError(f"Unknown example {example_id!r}; choose one of {', '.join(PROBLEMS)}")


def build_problem(example_id: str, value: Optional[float] = None) -> ProblemSpec:
    """ProblemSpec of an example with its shape parameter (default when None)."""
    return get_problem(example_id).build(value)


__all__ = [
    "BenchmarkProblem",
    "ConvectionLayerProblem",
    "ExponentialLayerProblem",
    "CornerLayersProblem",
    "PROBLEMS",
    "get_problem",
    "build_problem",
]
