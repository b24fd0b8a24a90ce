"""
Error Metrics - Closed-form P1 interpolation errors of quadratics, the global
estimator eta and brute-force quadrature oracles.

Edge vectors follow the mesh convention l1 = v3 - v2, l2 = v1 - v3,
l3 = v2 - v1 (sum zero, l_i opposite vertex i).
"""

import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Union

import numpy as np

from .exceptions import DegenerateTriangleError
from .mesh import ElementGeometry, TriMesh, edge_vectors, geometry_from_points
from .quadrature import DEGREE6
from .tensor import NodalTensorField, SymTensor2, det_entries, quadratic_form_entries
from ..utils.logger import get_logger

logger = get_logger(__name__)

DEGENERATE_TOL = 1e-14

TensorLike = Union[SymTensor2, Any]


@dataclass(frozen=True)
class QuadraticFunction:
    """u(x) = 1/2 x^T H x + g . x + c; the Hessian of u is exactly H."""
    hessian: SymTensor2
    linear: tuple = (0.0, 0.0)
    constant: float = 0.0

    def __call__(self, x: Any, y: Any) -> Any:
        h = self.hessian
        return (0.5 * (h.a11 * x * x + 2.0 * h.a12 * x * y + h.a22 * y * y)
                + self.linear[0] * x + self.linear[1] * y + self.constant)

    def gradient(self, x: Any, y: Any) -> tuple:
        h = self.hessian
        return h.a11 * x + h.a12 * y + self.linear[0], h.a12 * x + h.a22 * y + self.linear[1]


def _matrix(h: TensorLike) -> np.ndarray:
    if isinstance(h, SymTensor2):
        return h.matrix()
    m = np.asarray(h, dtype=float)
    if m.shape == (3,):
        return SymTensor2.from_array(m).matrix()
    return m.reshape(2, 2)


def _check(geometry: ElementGeometry) -> None:
    scale = float(np.max(geometry.edge_lengths)) ** 2
    if not geometry.area > DEGENERATE_TOL * scale:
        raise DegenerateTriangleError(f"Triangle area {geometry.area:.3e} is degenerate")


def h1_error_edges(h: TensorLike, geometry: ElementGeometry) -> float:
    """||grad(u - u_I)||^2 on K: 1/(48|K|) sum_i (l_{i+1} . H l_{i+2})^2 |l_i|^2."""
    _check(geometry)
    H = _matrix(h)
    l = geometry.edges
    total = 0.0
    for i in range(3):
        cross = float(l[(i + 1) % 3] @ H @ l[(i + 2) % 3])
        total += cross * cross * float(l[i] @ l[i])
    return total / (48.0 * geometry.area)


h1_error_thm21 = h1_error_edges


def h1_error_bank_smith(h: TensorLike, geometry: ElementGeometry) -> float:
    """1/4 v^T B v with v_i = l_i . H l_i."""
    _check(geometry)
    H = _matrix(h)
    l = geometry.edges
    v = np.einsum("ij,jk,ik->i", l, H, l)
    gram = l @ l.T
    B = 2.0 * gram
    np.fill_diagonal(B, np.trace(gram))
    B /= 48.0 * geometry.area
    return 0.25 * float(v @ B @ v)


def l2_error_nadler(h: TensorLike, geometry: ElementGeometry) -> float:
    """||u - u_I||^2 on K: |K|/180 [(sum D)^2 + sum D^2] with D_i = 1/2 l_i^T H l_i."""
    _check(geometry)
    H = _matrix(h)
    l = geometry.edges
    d = 0.5 * np.einsum("ij,jk,ik->i", l, H, l)
    return geometry.area / 180.0 * (float(d.sum()) ** 2 + float(d @ d))


def l2_error_nadler_printed(h: TensorLike, geometry: ElementGeometry) -> float:
    """The L2 expression with d_i = l_i . H l_i and cross products d_i d_j.

    Kept for comparison only: it disagrees with direct integration
    (7/30 instead of 11/180 for H = 2I on the unit right triangle).
    """
    _check(geometry)
    H = _matrix(h)
    l = geometry.edges
    d = np.einsum("ij,jk,ik->i", l, H, l)
    pairs = d[0] * d[1] + d[1] * d[2] + d[0] * d[2]
    return geometry.area / 180.0 * (float(d.sum()) ** 2 + float(pairs))


def oracle_interp_error(h: TensorLike, triangle: Any, norm: str = "h1") -> float:
    """Reference value by degree-6 quadrature of u = 1/2 x^T H x minus its P1 interpolant."""
    if norm not in ("l2", "h1"):
        raise ValueError(f"Unknown norm {norm!r}; expected 'l2' or 'h1'")
    pts = np.asarray(triangle, dtype=float).reshape(3, 2)
    geometry = geometry_from_points(pts)
    _check(geometry)
    # Centered at the centroid
    pts = pts - pts.mean(axis=0)
    u = QuadraticFunction(SymTensor2.from_matrix(_matrix(h)))
    nodal = u(pts[:, 0], pts[:, 1])
    q = DEGREE6.physical_points(pts)
    if norm == "l2":
        err = u(q[:, 0], q[:, 1]) - DEGREE6.points @ nodal
        integrand = err * err
    else:
        area2 = (pts[1, 0] - pts[0, 0]) * (pts[2, 1] - pts[0, 1]) - (pts[1, 1] - pts[0, 1]) * (pts[2, 0] - pts[0, 0])
        edges = np.array([pts[2] - pts[1], pts[0] - pts[2], pts[1] - pts[0]])
        grads = np.column_stack([-edges[:, 1], edges[:, 0]]) / area2
        gi = nodal @ grads
        gx, gy = u.gradient(q[:, 0], q[:, 1])
        integrand = (gx - gi[0]) ** 2 + (gy - gi[1]) ** 2
    return geometry.area * float(integrand @ DEGREE6.weights)


class EtaResult(NamedTuple):
    eta: float
    per_element: np.ndarray


def element_error_squares(hessian_field: NodalTensorField, mesh: TriMesh) -> np.ndarray:
    """Per-triangle e_K^2 using the vertex-averaged Hessian."""
    edges, areas = edge_vectors(mesh)
    hbar = hessian_field.entries[mesh.triangles].mean(axis=1)
    a, b, c = hbar[:, 0:1], hbar[:, 1:2], hbar[:, 2:3]
    hl = np.stack([a * edges[..., 0] + b * edges[..., 1], b * edges[..., 0] + c * edges[..., 1]], axis=-1)
    # (l_{i+1} . H l_{i+2}) for i = 0, 1, 2
    cross = np.einsum("tij,tij->ti", np.roll(edges, -1, axis=1), np.roll(hl, -2, axis=1))
    lengths2 = np.einsum("tij,tij->ti", edges, edges)
    return np.sum(cross * cross * lengths2, axis=1) / (48.0 * areas)


def eta_global(solution_hessian_field: NodalTensorField, mesh: TriMesh) -> EtaResult:
    """Global estimator eta = sqrt(sum_K e_K^2) and the per-element contributions."""
    per_element = element_error_squares(solution_hessian_field, mesh)
    return EtaResult(float(np.sqrt(per_element.sum())), per_element)


def coefficient_of_variation(values: np.ndarray) -> float:
    mean = float(np.mean(values))
    if mean == 0.0:
        return 0.0
    return float(np.std(values) / mean)


def quality_entries(edges: np.ndarray, areas: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Metric shape quality 4 sqrt(3) |K|_M / sum L_M^2 (1 for metric-equilateral)."""
    volume = areas * np.sqrt(np.maximum(det_entries(metric), 0.0))
    lengths2 = quadratic_form_entries(metric[..., None, :], edges).sum(axis=-1)
    return 4.0 * math.sqrt(3.0) * volume / lengths2


def element_quality(mesh: TriMesh, metric_field: NodalTensorField) -> np.ndarray:
    """Quality of every triangle under the vertex-averaged metric."""
    edges, areas = edge_vectors(mesh)
    mbar = metric_field.entries[mesh.triangles].mean(axis=1)
    return quality_entries(edges, areas, mbar)


# Randomized agreement check ----------------------------------------------------

@dataclass(frozen=True)
class FormulaCheck:
    """Largest relative deviation of each closed form from the quadrature oracle."""
    trials: int
    h1_edges: float
    h1_bank_smith: float
    l2_nadler: float
    l2_nadler_printed: float

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "h1_edges": self.h1_edges,
            "h1_bank_smith": self.h1_bank_smith,
            "l2_nadler": self.l2_nadler,
            "l2_nadler_printed": self.l2_nadler_printed,
        }


def random_triangle(rng: np.random.Generator, max_aspect: float = 1e3) -> np.ndarray:
    """Random well-formed triangle stretched by up to ``max_aspect`` in a random direction."""
    while True:
        pts = rng.random((3, 2))
        e1, e2 = pts[1] - pts[0], pts[2] - pts[0]
        if abs(e1[0] * e2[1] - e1[1] * e2[0]) > 0.1:
            break
    aspect = 10.0 ** rng.uniform(0.0, math.log10(max_aspect)) if max_aspect > 1.0 else 1.0
    theta = rng.uniform(0.0, math.pi)
    c, s = math.cos(theta), math.sin(theta)
    stretch = np.array([[aspect, 0.0], [0.0, 1.0]]) @ np.array([[c, s], [-s, c]])
    return pts @ stretch + rng.normal(size=2)


def _deviation(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), 1e-300)


def formula_check(trials: int, seed: int = 0, max_aspect: float = 1e3) -> FormulaCheck:
    """Compare every closed form against degree-6 quadrature on random (H, triangle) pairs."""
    rng = np.random.default_rng(seed)
    worst = dict(h1_edges=0.0, h1_bank_smith=0.0, l2_nadler=0.0, l2_nadler_printed=0.0)
    for _ in range(trials):
        h = SymTensor2.from_array(rng.normal(size=3))
        tri = random_triangle(rng, max_aspect)
        geometry = geometry_from_points(tri)
        h1 = oracle_interp_error(h, tri, "h1")
        l2 = oracle_interp_error(h, tri, "l2")
        worst["h1_edges"] = max(worst["h1_edges"], _deviation(h1_error_edges(h, geometry), h1))
        worst["h1_bank_smith"] = max(worst["h1_bank_smith"], _deviation(h1_error_bank_smith(h, geometry), h1))
        worst["l2_nadler"] = max(worst["l2_nadler"], _deviation(l2_error_nadler(h, geometry), l2))
        worst["l2_nadler_printed"] = max(worst["l2_nadler_printed"],
                                         _deviation(l2_error_nadler_printed(h, geometry), l2))
    logger.debug(f"Formula check over {trials} trials: {worst}")
    return FormulaCheck(trials=trials, **worst)
