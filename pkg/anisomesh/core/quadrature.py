"""
Quadrature - Symmetric integration rules on triangles.

Rules are stored as barycentric points and weights summing to one, so the
integral over K is |K| times the weighted sum.
"""

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class TriangleRule:
    """Barycentric quadrature rule with weights normalized to sum 1."""
    name: str
    degree: int
    points: np.ndarray
    weights: np.ndarray

    def physical_points(self, corners: np.ndarray) -> np.ndarray:
        """Map the rule onto one or many triangles.

        ``corners`` has shape (3, 2) or (nt, 3, 2); the result has shape
        (q, 2) or (nt, q, 2).
        """
        return np.einsum("qi,...ij->...qj", self.points, corners)

    def integrate(self, func: Callable[[np.ndarray, np.ndarray], Any], corners: np.ndarray) -> np.ndarray:
        """Integrate a vectorized f(x, y) over one or many triangles."""
        corners = np.asarray(corners, dtype=float)
        pts = self.physical_points(corners)
        values = np.asarray(func(pts[..., 0], pts[..., 1]), dtype=float)
        areas = 0.5 * np.abs(_signed_area2(corners))
        return areas * (values @ self.weights)


def _orbit3(a: float) -> np.ndarray:
    b = 1.0 - 2.0 * a
    return np.array([[b, a, a], [a, b, a], [a, a, b]])


def _orbit6(a: float, b: float) -> np.ndarray:
    c = 1.0 - a - b
    return np.array([[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]])


def _dunavant6() -> TriangleRule:
    points = np.vstack([
        _orbit3(0.249286745170910421291638553107),
        _orbit3(0.063089014491502228340331602870),
        _orbit6(0.053145049844816947353249671631, 0.310352451033784405416607733956),
    ])
    weights = np.concatenate([
        np.full(3, 0.116786275726379366030690538687),
        np.full(3, 0.050844906370206816920936809106),
        np.full(6, 0.082851075618373575193553456421),
    ])
    weights = weights / weights.sum()
    return TriangleRule("dunavant-6", 6, points, weights)


def _edge_midpoints() -> TriangleRule:
    points = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    return TriangleRule("edge-midpoints", 2, points, np.full(3, 1.0 / 3.0))


def _signed_area2(corners: np.ndarray) -> Any:
    e1 = corners[..., 1, :] - corners[..., 0, :]
    e2 = corners[..., 2, :] - corners[..., 0, :]
    return e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]


DEGREE6 = _dunavant6()
EDGE_MIDPOINTS = _edge_midpoints()

