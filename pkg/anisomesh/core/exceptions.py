"""
Exceptions - Error hierarchy shared by every anisomesh module.
"""

from typing import Any, Optional


class AnisomeshError(Exception):
    """Base class for all anisomesh errors."""


# Mesh ------------------------------------------------------------------------

class MeshError(AnisomeshError):
    """Mesh construction or query failure."""


class MeshValidationError(MeshError, ValueError):
    """A TriMesh invariant does not hold."""


class NonConformingError(MeshValidationError):
    """Edge shared by more than two triangles, or a broken boundary."""


class DegenerateTriangleError(MeshValidationError):
    """Triangle with (near) zero area."""


class DanglingVertexError(MeshValidationError):
    """Vertex not referenced by any triangle."""


class DuplicateVertexError(MeshValidationError):
    """Two vertices closer than the duplicate tolerance."""


class DuplicateTriangleError(MeshValidationError):
    """The same vertex triple appears in more than one triangle."""


class FieldError(MeshError, ValueError):
    """Nodal field does not match its mesh or holds non-finite values."""


class PointOutsideDomainError(MeshError):
    """Point cannot be located in the mesh."""

    def __init__(self, point: Any, message: Optional[str] = None) -> None:
        self.point = point
        super().__init__(message or f"Point {tuple(point)} lies outside the domain")


# MEDIT I/O ---------------------------------------------------------------------

class MeditError(AnisomeshError, ValueError):
    """MEDIT text could not be read."""


class ParseError(MeditError):
    """Malformed MEDIT content."""

    def __init__(self, line: int, message: str) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnsupportedDimensionError(MeditError):
    """MEDIT file declares a dimension other than 2."""


# Tensors -----------------------------------------------------------------------

class TensorError(AnisomeshError, ValueError):
    """Tensor field construction failure."""


class NonPositiveAlphaError(TensorError):
    """Flooring parameter must be strictly positive."""


class NotSPDError(TensorError):
    """Tensor is not symmetric positive definite."""


class ZeroSigmaError(TensorError):
    """Monitor integrates to zero; cannot normalize."""


# FEM ---------------------------------------------------------------------------

class ProblemError(AnisomeshError, ValueError):
    """ProblemSpec invariant violated."""


class MissingExactSolutionError(AnisomeshError):
    """An error norm was requested but the exact solution is unknown."""


class SolverBreakdownError(AnisomeshError):
    """Linear solve did not reach the residual contract."""

    def __init__(self, residual: float, message: Optional[str] = None) -> None:
        self.residual = residual
        super().__init__(message or f"Linear solver breakdown (relative residual {residual:.3e})")


# Adaptation --------------------------------------------------------------------

class AdaptationError(AnisomeshError):
    """Adaptive loop aborted; carries the partial report."""

    def __init__(self, message: str, report: Any = None) -> None:
        self.report = report
        super().__init__(message)
