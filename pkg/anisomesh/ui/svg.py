"""
SVG - Static rendering of triangle meshes with an optional nodal field.
"""

from typing import Any, List, Optional, Tuple

import numpy as np

from ..core.exceptions import FieldError
from ..core.mesh import NodalScalarField, TriMesh

CANVAS = 800.0
MARGIN = 10.0
UNIFORM_FILL = "#e8eef6"
STROKE = "#1f2933"
LOW = (49, 54, 149)
HIGH = (215, 48, 39)

Color = Tuple[int, int, int]


def _hex(rgb: Color) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _blend(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    return _hex(tuple(int(round(lo + t * (hi - lo))) for lo, hi in zip(LOW, HIGH)))


def _field_values(mesh: TriMesh, field: Any) -> Optional[np.ndarray]:
    if field is None:
        return None
    values = field.values if isinstance(field, NodalScalarField) else np.asarray(field, dtype=float).reshape(-1)
    if values.size == 0:
        return None
    if values.size != mesh.n_vertices:
        raise FieldError(f"Field has {values.size} values but the mesh has {mesh.n_vertices} vertices")
    return values


def triangle_colors(mesh: TriMesh, field: Any = None) -> List[str]:
    """Fill colour per triangle from the mean of its vertex values."""
    values = _field_values(mesh, field)
    if values is None:
        return [UNIFORM_FILL] * mesh.n_triangles
    per_triangle = values[mesh.triangles].mean(axis=1)
    lo, hi = float(values.min()), float(values.max())
    if not hi > lo:
        return [UNIFORM_FILL] * mesh.n_triangles
    return [_blend((v - lo) / (hi - lo)) for v in per_triangle]


def render_svg(mesh: TriMesh, field: Any = None, size: float = CANVAS) -> str:
    """One polygon per triangle; the y axis points up; output is deterministic."""
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    extent = hi - lo
    scale = (size - 2.0 * MARGIN) / max(float(extent.max()), 1e-300)
    width = extent[0] * scale + 2.0 * MARGIN
    height = extent[1] * scale + 2.0 * MARGIN
    xs = MARGIN + (mesh.vertices[:, 0] - lo[0]) * scale
    ys = height - MARGIN - (mesh.vertices[:, 1] - lo[1]) * scale
    stroke_width = max(0.05, min(1.0, 0.25 * size / max(np.sqrt(mesh.n_triangles), 1.0) / 10.0))

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3f}" height="{height:.3f}" '
        f'viewBox="0 0 {width:.3f} {height:.3f}">',
        f'<g stroke="{STROKE}" stroke-width="{stroke_width:.3f}" stroke-linejoin="round">',
    ]
    for tri, color in zip(mesh.triangles, triangle_colors(mesh, field)):
        points = " ".join(f"{xs[v]:.3f},{ys[v]:.3f}" for v in tri)
        lines.append(f'<polygon points="{points}" fill="{color}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
