"""
Core functionality for anisomesh.

This package contains the mesh data structure, tensor fields and metrics,
the P1 solver, recovery, error formulas and the remeshing loop.
"""

from .adaptive import AdaptConfig, AdaptReport, IterationRecord, adapt_mesh, adaptive_solve
from .fem import ProblemSpec, fem_solve
from .mesh import NodalScalarField, TriMesh, build_mesh, structured_unit_square
from .tensor import MetricKind, MetricParams, NodalTensorField, SymTensor2

__all__ = [
    "AdaptConfig",
    "AdaptReport",
    "IterationRecord",
    "adapt_mesh",
    "adaptive_solve",
    "ProblemSpec",
    "fem_solve",
    "NodalScalarField",
    "TriMesh",
    "build_mesh",
    "structured_unit_square",
    "MetricKind",
    "MetricParams",
    "NodalTensorField",
    "SymTensor2",
]
