"""
Tensor - Symmetric 2x2 tensor algebra, monitor functions and metric tensors.

Tensors are stored as three entries (a11, a12, a22). Every vectorized helper
works on arrays of shape (n, 3) so that whole nodal fields are processed at
once; the scalar operations are thin wrappers around them.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import NonPositiveAlphaError, NotSPDError, TensorError, ZeroSigmaError
from .mesh import TriMesh, interpolation_weights, locate_point
from ..utils.logger import get_logger

logger = get_logger(__name__)

SPD_CLAMP = 1e-12
FLOOR_RELATIVE = 1e-3
FLOOR_MINIMUM = 1e-10
UNIT_BAND = (1.0 / math.sqrt(2.0), math.sqrt(2.0))


class TensorRole(str, Enum):
    HESSIAN = "hessian"
    MONITOR = "monitor"
    METRIC = "metric"


class MetricKind(str, Enum):
    """Available metric constructions."""
    NEW_H1 = "new_h1"
    NEW_L2 = "new_l2"
    MODIFIED_HESSIAN = "modified_hessian"
    HUANG_H1 = "huang_h1"
    HUANG_L2 = "huang_l2"

    @classmethod
    def from_cli(cls, name: str) -> "MetricKind":
        """Accept both ``new-h1`` and ``new_h1`` spellings plus ``mod-hessian``."""
        key = name.strip().lower().replace("-", "_")
        if key == "mod_hessian":
            key = "modified_hessian"
        return cls(key)

    @property
    def cli_name(self) -> str:
        if self is MetricKind.MODIFIED_HESSIAN:
            return "mod-hessian"
        return self.value.replace("_", "-")


@dataclass(frozen=True)
class SymTensor2:
    """Symmetric 2x2 tensor [[a11, a12], [a12, a22]]."""
    a11: float
    a12: float
    a22: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.a11, self.a12, self.a22)):
            raise TensorError("Tensor entries must be finite")

    @classmethod
    def from_array(cls, entries: Any) -> "SymTensor2":
        a11, a12, a22 = (float(v) for v in np.asarray(entries, dtype=float).reshape(3))
        return cls(a11, a12, a22)

    @classmethod
    def from_matrix(cls, matrix: Any) -> "SymTensor2":
        m = np.asarray(matrix, dtype=float).reshape(2, 2)
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    @classmethod
    def identity(cls, scale: float = 1.0) -> "SymTensor2":
        return cls(scale, 0.0, scale)

    def as_array(self) -> np.ndarray:
        return np.array([self.a11, self.a12, self.a22])

    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a12

    def quadratic_form(self, e: Any) -> float:
        """e^T t e."""
        x, y = float(e[0]), float(e[1])
        return self.a11 * x * x + 2.0 * self.a12 * x * y + self.a22 * y * y


class Eigen(NamedTuple):
    """Eigen-decomposition t = R^T diag(lambda1, lambda2) R with lambda1 >= lambda2."""
    lambda1: float
    lambda2: float
    angle: float

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, s], [-s, c]])


# Vectorized kernels ------------------------------------------------------------

def eig_entries(entries: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form eigenvalues (descending) and principal angle of (n, 3) tensors."""
    a, b, c = entries[..., 0], entries[..., 1], entries[..., 2]
    mean = 0.5 * (a + c)
    radius = np.hypot(0.5 * (a - c), b)
    angle = 0.5 * np.arctan2(2.0 * b, a - c)
    return mean + radius, mean - radius, angle


def compose_entries(l1: np.ndarray, l2: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """Entries of R^T diag(l1, l2) R for rotation angle ``angle``."""
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c], axis=-1)


def abs_entries(entries: np.ndarray) -> np.ndarray:
    l1, l2, angle = eig_entries(entries)
    mixed = compose_entries(np.abs(l1), np.abs(l2), angle)
    out = np.where((l1 <= 0.0)[..., None], -entries, mixed)
    return np.where((l2 >= 0.0)[..., None], entries, out)


def det_entries(entries: np.ndarray) -> np.ndarray:
    return entries[..., 0] * entries[..., 2] - entries[..., 1] ** 2


def floor_entries(entries: np.ndarray, alpha: float) -> np.ndarray:
    _check_alpha(alpha)
    out = abs_entries(entries)
    out[..., 0] += alpha
    out[..., 2] += alpha
    return out


def anisotropy_entries(entries: np.ndarray) -> np.ndarray:
    det = det_entries(entries)
    if np.any(entries[..., 0] <= 0.0) or np.any(det <= 0.0):
        raise NotSPDError("Anisotropy factor needs a symmetric positive definite tensor")
    return np.sqrt((entries[..., 0] + entries[..., 2]) / np.sqrt(det))


def clamp_spd_entries(entries: np.ndarray, relative: float = SPD_CLAMP) -> np.ndarray:
    """Raise eigenvalues to at least ``relative`` times the local spectral radius."""
    l1, l2, angle = eig_entries(entries)
    floor = relative * np.maximum(np.abs(l1), np.abs(l2))
    needs = l2 < floor
    if not np.any(needs):
        return entries
    fixed = compose_entries(np.maximum(l1, floor), np.maximum(l2, floor), angle)
    return np.where(needs[..., None], fixed, entries)


def quadratic_form_entries(entries: np.ndarray, e: np.ndarray) -> np.ndarray:
    """e^T M e for matching leading shapes."""
    x, y = e[..., 0], e[..., 1]
    return entries[..., 0] * x * x + 2.0 * entries[..., 1] * x * y + entries[..., 2] * y * y


def _check_alpha(alpha: float) -> None:
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise NonPositiveAlphaError(f"Flooring parameter must be positive, got {alpha}")


# Single-tensor operations ------------------------------------------------------

def eig_sym2(t: SymTensor2) -> Eigen:
    l1, l2, angle = eig_entries(t.as_array())
    return Eigen(float(l1), float(l2), float(angle))


def abs_tensor(t: SymTensor2) -> SymTensor2:
    """|t| = R^T diag(|l1|, |l2|) R."""
    return SymTensor2.from_array(abs_entries(t.as_array()))


def floor_regularize(t: SymTensor2, alpha: float) -> SymTensor2:
    """alpha * I + |t|."""
    return SymTensor2.from_array(floor_entries(t.as_array(), alpha))


def anisotropy_factor(h: SymTensor2) -> float:
    """(tr h / sqrt(det h))^(1/2); equals sqrt(2) for isotropic h."""
    return float(anisotropy_entries(h.as_array()))


# Fields ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NodalTensorField:
    """One symmetric tensor per mesh vertex, stored as (nv, 3) entries."""
    mesh: TriMesh
    entries: np.ndarray
    role: TensorRole = TensorRole.HESSIAN

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float).reshape(-1, 3)
        if entries.shape[0] != self.mesh.n_vertices:
            raise TensorError(
                f"Tensor field has {entries.shape[0]} entries but the mesh has {self.mesh.n_vertices} vertices"
            )
        if not np.all(np.isfinite(entries)):
            raise TensorError("Tensor field holds non-finite entries")
        if self.role == TensorRole.METRIC:
            if np.any(entries[:, 0] <= 0.0) or np.any(det_entries(entries) <= 0.0):
                raise NotSPDError("Metric field must be positive definite at every vertex")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def constant(cls, mesh: TriMesh, tensor: SymTensor2, role: TensorRole = TensorRole.METRIC) -> "NodalTensorField":
        return cls(mesh, np.tile(tensor.as_array(), (mesh.n_vertices, 1)), role)

    def __len__(self) -> int:
        return int(self.entries.shape[0])

    def tensor(self, vertex: int) -> SymTensor2:
        return SymTensor2.from_array(self.entries[vertex])

    def min_eigenvalue(self) -> float:
        _, l2, _ = eig_entries(self.entries)
        return float(l2.min())


class MetricParams(BaseModel):
    """Target size and flooring for metric construction.

    Unset flooring parameters fall back to ``default_floor`` of the Hessian.
    """
    model_config = ConfigDict(frozen=True)

    n_target: int = Field(ge=1)
    alpha0: Optional[float] = Field(default=None, gt=0)
    alpha1: Optional[float] = Field(default=None, gt=0)
    kind: MetricKind = MetricKind.NEW_H1


def _monitor(hessian: NodalTensorField, entries: np.ndarray) -> NodalTensorField:
    return NodalTensorField(hessian.mesh, entries, TensorRole.MONITOR)


def monitor_h1(hessian_field: NodalTensorField, alpha1: float) -> NodalTensorField:
    """Anisotropy-weighted floored Hessian for H1-seminorm control."""
    floored = floor_entries(hessian_field.entries, alpha1)
    return _monitor(hessian_field, anisotropy_entries(floored)[:, None] * floored)


def monitor_l2(hessian_field: NodalTensorField, alpha0: float) -> NodalTensorField:
    """det^(-1/6)-scaled floored Hessian for L2 control."""
    floored = floor_entries(hessian_field.entries, alpha0)
    return _monitor(hessian_field, det_entries(floored)[:, None] ** (-1.0 / 6.0) * floored)


def monitor_modified_hessian(hessian_field: NodalTensorField, alpha1: float) -> NodalTensorField:
    return _monitor(hessian_field, floor_entries(hessian_field.entries, alpha1))


def monitor_huang(hessian_field: NodalTensorField, alpha: float, norm: str = "h1") -> NodalTensorField:
    """I + |H|/alpha, with det^(-1/6) scaling for the L2 variant."""
    _check_alpha(alpha)
    if norm not in ("l2", "h1"):
        raise TensorError(f"Unknown norm {norm!r}; expected 'l2' or 'h1'")
    g = abs_entries(hessian_field.entries) / alpha
    g[:, 0] += 1.0
    g[:, 2] += 1.0
    if norm == "l2":
        g = det_entries(g)[:, None] ** (-1.0 / 6.0) * g
    return _monitor(hessian_field, g)


def default_floor(hessian_field: NodalTensorField) -> float:
    """Relative flooring: 1e-3 of the domain average of the |H| spectral radius, at least 1e-10.

    The average is taken with the vertex-mean rule per triangle, so refined
    layers do not weigh more than their area.
    """
    mesh = hessian_field.mesh
    if len(hessian_field) == 0 or mesh.n_triangles == 0:
        return FLOOR_MINIMUM
    l1, l2, _ = eig_entries(hessian_field.entries)
    radius = np.maximum(np.abs(l1), np.abs(l2))
    areas = mesh.areas
    average = float(np.sum(areas * radius[mesh.triangles].mean(axis=1)) / np.sum(areas))
    return max(FLOOR_MINIMUM, FLOOR_RELATIVE * average)


def build_monitor(hessian_field: NodalTensorField, params: MetricParams) -> NodalTensorField:
    """Dispatch on the metric kind."""
    fallback = None
    if params.alpha0 is None or params.alpha1 is None:
        fallback = default_floor(hessian_field)
    alpha0 = params.alpha0 if params.alpha0 is not None else fallback
    alpha1 = params.alpha1 if params.alpha1 is not None else fallback
    kind = params.kind
    if kind == MetricKind.NEW_H1:
        return monitor_h1(hessian_field, alpha1)
    if kind == MetricKind.NEW_L2:
        return monitor_l2(hessian_field, alpha0)
    if kind == MetricKind.MODIFIED_HESSIAN:
        return monitor_modified_hessian(hessian_field, alpha1)
    if kind == MetricKind.HUANG_H1:
        return monitor_huang(hessian_field, alpha1, "h1")
    return monitor_huang(hessian_field, alpha0, "l2")


def sigma(monitor_field: NodalTensorField, mesh: TriMesh) -> float:
    """Vertex-mean quadrature of sqrt(det M) over the domain."""
    rho = np.sqrt(np.maximum(det_entries(monitor_field.entries), 0.0))
    return float(np.sum(mesh.areas * rho[mesh.triangles].mean(axis=1)))


def normalize_metric(monitor_field: NodalTensorField, mesh: TriMesh, n_target: int) -> NodalTensorField:
    """Scale the monitor by N / sigma so that the metric volume of the domain equals N."""
    if monitor_field.mesh.n_vertices != mesh.n_vertices:
        raise TensorError("Monitor field is not bound to the given mesh")
    total = sigma(monitor_field, mesh)
    if not (total > 0.0 and math.isfinite(total)):
        raise ZeroSigmaError(f"Monitor integrates to {total}; cannot normalize")
    return NodalTensorField(mesh, (n_target / total) * monitor_field.entries, TensorRole.METRIC)


def build_metric(
    hessian_field: NodalTensorField,
    mesh: TriMesh,
    params: MetricParams,
    coefficient: float = 1.0,
) -> NodalTensorField:
    """Monitor, normalization and the multiplicative sizing coefficient in one step."""
    metric = normalize_metric(build_monitor(hessian_field, params), mesh, params.n_target)
    if coefficient != 1.0:
        metric = NodalTensorField(mesh, coefficient * metric.entries, TensorRole.METRIC)
    logger.debug(
        f"Built {params.kind.value} metric: N={params.n_target}, coefficient={coefficient:.4g}, "
        f"min eigenvalue={metric.min_eigenvalue():.3e}"
    )
    return metric


# Point queries -----------------------------------------------------------------

def interpolate_metric(metric_field: NodalTensorField, point: Any, hint_triangle: int = 0) -> SymTensor2:
    """Barycentric entrywise interpolation followed by an SPD clamp."""
    mesh = metric_field.mesh
    loc = locate_point(mesh, point, hint_triangle)
    entries = loc.barycentric @ metric_field.entries[mesh.triangles[loc.triangle]]
    return SymTensor2.from_array(clamp_spd_entries(entries))


def metric_edge_length(metric_field: NodalTensorField, point_a: Any, point_b: Any) -> float:
    """Endpoint-average metric length of segment a-b."""
    a = np.asarray(point_a, dtype=float)
    b = np.asarray(point_b, dtype=float)
    e = b - a
    ma = interpolate_metric(metric_field, a)
    mb = interpolate_metric(metric_field, b)
    return 0.5 * (math.sqrt(max(ma.quadratic_form(e), 0.0)) + math.sqrt(max(mb.quadratic_form(e), 0.0)))


def transfer_tensor_field(field: NodalTensorField, new_mesh: TriMesh) -> NodalTensorField:
    """Interpolate a tensor field onto the vertices of another mesh."""
    idx, weights = interpolation_weights(field.mesh, new_mesh.vertices)
    entries = np.einsum("nk,nkj->nj", weights, field.entries[idx])
    if field.role == TensorRole.METRIC:
        entries = clamp_spd_entries(entries)
    return NodalTensorField(new_mesh, entries, field.role)


# Edge statistics ---------------------------------------------------------------

@dataclass(frozen=True)
class EdgeLengthSummary:
    """Metric edge-length statistics of a mesh."""
    count: int
    minimum: float
    maximum: float
    mean: float
    in_band: float

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "min": self.minimum,
            "max": self.maximum,
            "mean": self.mean,
            "in_band": self.in_band,
        }


def edge_metric_lengths(mesh: TriMesh, metric_field: NodalTensorField) -> np.ndarray:
    """Endpoint-average metric length of every mesh edge, using the nodal tensors."""
    a, b = mesh.edges[:, 0], mesh.edges[:, 1]
    e = mesh.vertices[b] - mesh.vertices[a]
    la = np.sqrt(np.maximum(quadratic_form_entries(metric_field.entries[a], e), 0.0))
    lb = np.sqrt(np.maximum(quadratic_form_entries(metric_field.entries[b], e), 0.0))
    return 0.5 * (la + lb)


def edge_length_summary(
    mesh: TriMesh,
    metric_field: NodalTensorField,
    band: Tuple[float, float] = UNIT_BAND,
) -> EdgeLengthSummary:
    lengths = edge_metric_lengths(mesh, metric_field)
    inside = (lengths >= band[0] * (1.0 - 1e-12)) & (lengths <= band[1] * (1.0 + 1e-12))
    return EdgeLengthSummary(
        count=int(lengths.size),
        minimum=float(lengths.min()),
        maximum=float(lengths.max()),
        mean=float(lengths.mean()),
        in_band=float(inside.mean()),
    )
