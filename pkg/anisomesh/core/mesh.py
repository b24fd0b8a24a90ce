"""
Mesh - Conforming triangle mesh with geometry queries, point location and P1 transfer.

A ``TriMesh`` is immutable once built. Every mesh in the package is produced
by ``build_mesh``, which orients triangles counterclockwise and checks the
conformity invariants; ``TriMesh.validate`` re-runs the same checks.
"""

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .exceptions import (
    DanglingVertexError,
    DegenerateTriangleError,
    DuplicateTriangleError,
    DuplicateVertexError,
    FieldError,
    MeshValidationError,
    NonConformingError,
    PointOutsideDomainError,
)
from ..utils.logger import get_logger

logger = get_logger(__name__)

BARY_TOL = 1e-10
DEGENERATE_TOL = 1e-14
DUPLICATE_TOL = 1e-12
COLLINEAR_TOL = 1e-9
PROJECTION_TOL = 1e-10

# Local edge i is opposite local vertex i
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


class VertexFlag(IntEnum):
    """Per-vertex boundary marker."""
    INTERIOR = 0
    BOUNDARY = 1
    CORNER = 2


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Area and edge vectors of one triangle (edge i opposite vertex i, sum zero)."""
    area: float
    edges: np.ndarray
    edge_lengths: np.ndarray


class PointLocation(NamedTuple):
    """Containing triangle and barycentric coordinates of a point."""
    triangle: int
    barycentric: np.ndarray


class TriMesh:
    """Validated conforming 2D triangulation."""

    def __init__(
        self,
        vertices: np.ndarray,
        triangles: np.ndarray,
        boundary_edges: np.ndarray,
        boundary_tags: np.ndarray,
        vertex_flags: np.ndarray,
        neighbors: np.ndarray,
        edges: np.ndarray,
    ) -> None:
        self.vertices = _frozen(vertices)
        self.triangles = _frozen(triangles)
        self.boundary_edges = _frozen(boundary_edges)
        self.boundary_tags = _frozen(boundary_tags)
        self.vertex_flags = _frozen(vertex_flags)
        self.neighbors = _frozen(neighbors)
        self.edges = _frozen(edges)

    def __repr__(self) -> str:
        return f"TriMesh(nv={self.n_vertices}, nbt={self.n_triangles}, ne={self.n_edges})"

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def areas(self) -> np.ndarray:
        """Triangle areas |K|."""
        _, areas = edge_vectors(self)
        return _frozen(areas)

    @cached_property
    def centroids(self) -> np.ndarray:
        return _frozen(self.vertices[self.triangles].mean(axis=1))

    @cached_property
    def diameter(self) -> float:
        """Bounding-box diagonal, the unit-free tolerance scale."""
        return _diameter(self.vertices)

    @property
    def domain_area(self) -> float:
        return float(np.sum(self.areas))

    @property
    def tag_set(self) -> Tuple[int, ...]:
        return tuple(sorted(set(int(t) for t in self.boundary_tags)))

    @cached_property
    def incidence(self) -> sparse.csr_matrix:
        """Vertex-to-triangle incidence (rows: vertices, columns: triangles)."""
        nt = self.n_triangles
        rows = self.triangles.ravel()
        cols = np.repeat(np.arange(nt), 3)
        data = np.ones(rows.size)
        matrix = sparse.csr_matrix((data, (rows, cols)), shape=(self.n_vertices, nt))
        matrix.sort_indices()
        return matrix

    def vertex_triangles(self, vertex: int) -> np.ndarray:
        """Triangles incident to a vertex, ascending."""
        inc = self.incidence
        return inc.indices[inc.indptr[vertex]:inc.indptr[vertex + 1]]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return _frozen(np.nonzero(self.vertex_flags != VertexFlag.INTERIOR)[0])

    @cached_property
    def corner_vertices(self) -> np.ndarray:
        return _frozen(np.nonzero(self.vertex_flags == VertexFlag.CORNER)[0])

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    def validate(self) -> None:
        """Re-check every TriMesh invariant; raises MeshValidationError."""
        boundary = [
            (int(a), int(b), int(t))
            for (a, b), t in zip(self.boundary_edges, self.boundary_tags)
        ]
        _analyse(self.vertices, self.triangles, boundary, fix_orientation=False)


@dataclass(frozen=True, eq=False)
class NodalScalarField:
    """One real value per mesh vertex."""
    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != self.mesh.n_vertices:
            raise FieldError(
                f"Field has {values.size} values but the mesh has {self.mesh.n_vertices} vertices"
            )
        if not np.all(np.isfinite(values)):
            raise FieldError("Field holds non-finite values")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_function(cls, mesh: TriMesh, func: Any) -> "NodalScalarField":
        """Sample a vectorized f(x, y) at the mesh vertices."""
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        return cls(mesh, np.broadcast_to(np.asarray(func(x, y), dtype=float), x.shape))


# Construction ------------------------------------------------------------------

def build_mesh(
    vertices: Any,
    triangles: Any,
    boundary_edges: Optional[Iterable[Any]] = None,
) -> TriMesh:
    """Build a validated TriMesh; clockwise triangles are reoriented.

    ``boundary_edges`` holds ``(a, b, tag)`` or ``((a, b), tag)`` items. When it
    is omitted the boundary is derived and each straight segment gets its own tag.
    """
    verts = np.array(vertices, dtype=float).reshape(-1, 2)
    tris = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    if tris.shape[0] == 0:
        raise MeshValidationError("Mesh has no triangles")
    if not np.all(np.isfinite(verts)):
        raise MeshValidationError("Vertex coordinates must be finite")
    if tris.min() < 0 or tris.max() >= verts.shape[0]:
        raise MeshValidationError("Triangle references a vertex that does not exist")
    data = _analyse(verts, tris, boundary_edges, fix_orientation=True)
    return TriMesh(**data)


def structured_unit_square(n: int) -> TriMesh:
    """Uniform (n x n)-cell mesh of (0,1)^2, every cell split along the same diagonal.

    Boundary tags: 1 bottom, 2 right, 3 top, 4 left.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    a = (j * (n + 1) + i).ravel()
    b, c, d = a + 1, a + n + 2, a + n + 1
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([a, b, c])
    triangles[1::2] = np.column_stack([a, c, d])

    k = np.arange(n)
    bottom = np.column_stack([k, k + 1, np.full(n, 1)])
    right = np.column_stack([k * (n + 1) + n, (k + 1) * (n + 1) + n, np.full(n, 2)])
    top = np.column_stack([n * (n + 1) + k + 1, n * (n + 1) + k, np.full(n, 3)])
    left = np.column_stack([(k + 1) * (n + 1), k * (n + 1), np.full(n, 4)])
    boundary = np.vstack([bottom, right, top, left])
    return build_mesh(vertices, triangles, boundary.tolist())


# Geometry ----------------------------------------------------------------------

def edge_vectors(mesh: TriMesh) -> Tuple[np.ndarray, np.ndarray]:
    """All edge vectors (nt, 3, 2) and areas (nt,), same convention as element_geometry."""
    p = mesh.vertices[mesh.triangles]
    edges = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    areas = 0.5 * _cross(edges[:, 2], -edges[:, 1])
    return edges, areas


def element_geometry(mesh: TriMesh, triangle_index: int) -> ElementGeometry:
    """Edge vectors l1 = v3-v2, l2 = v1-v3, l3 = v2-v1 and area of one triangle."""
    if not 0 <= triangle_index < mesh.n_triangles:
        raise IndexError(f"Triangle index {triangle_index} out of range [0, {mesh.n_triangles})")
    return geometry_from_points(mesh.vertices[mesh.triangles[triangle_index]])


def geometry_from_points(points: Any) -> ElementGeometry:
    """ElementGeometry of a triangle given as three points (any orientation)."""
    v = np.asarray(points, dtype=float).reshape(3, 2)
    edges = np.array([v[2] - v[1], v[0] - v[2], v[1] - v[0]])
    area = 0.5 * float(_cross(edges[2], -edges[1]))
    if area < 0:
        # Reverse orientation so that the area is positive
        v = v[[0, 2, 1]]
        edges = np.array([v[2] - v[1], v[0] - v[2], v[1] - v[0]])
        area = -area
    return ElementGeometry(area=area, edges=edges, edge_lengths=np.linalg.norm(edges, axis=1))


# Point location ----------------------------------------------------------------

def barycentric(mesh: TriMesh, triangle: int, point: Any) -> np.ndarray:
    """Barycentric coordinates of a point with respect to one triangle."""
    v0, v1, v2 = mesh.vertices[mesh.triangles[triangle]]
    p = np.asarray(point, dtype=float)
    area2 = _cross(v1 - v0, v2 - v0)
    l0 = _cross(v1 - p, v2 - p) / area2
    l1 = _cross(v2 - p, v0 - p) / area2
    return np.array([l0, l1, 1.0 - l0 - l1])


def locate_point(mesh: TriMesh, point: Any, hint_triangle: int = 0) -> PointLocation:
    """Find the triangle containing a point (lowest index on shared edges/vertices)."""
    p = np.asarray(point, dtype=float).reshape(2)
    start = hint_triangle if 0 <= hint_triangle < mesh.n_triangles else 0
    found = _walk(mesh, p, start)
    if found is None:
        # Walk left the domain (non-convex boundary) or cycled: scan everything
        found = _scan(mesh, p)
        if found is None:
            raise PointOutsideDomainError(p)
    else:
        found = _lowest_containing(mesh, p, found)
    return PointLocation(found, barycentric(mesh, found, p))


def locate_points(mesh: TriMesh, points: Any, strict: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """Locate many points; hints come from the nearest triangle centroid.

    With ``strict=False`` a point outside the domain gets triangle -1 and zero
    coordinates instead of raising ``PointOutsideDomainError``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 3))
    _, hints = mesh._centroid_tree.query(pts)
    tris = np.empty(pts.shape[0], dtype=np.int64)
    bary = np.empty((pts.shape[0], 3))
    for k, (p, hint) in enumerate(zip(pts, hints)):
        try:
            loc = locate_point(mesh, p, int(hint))
        except PointOutsideDomainError:
            if strict:
                raise
            tris[k] = -1
            bary[k] = 0.0
            continue
        tris[k] = loc.triangle
        bary[k] = loc.barycentric
    return tris, bary


def _walk(mesh: TriMesh, p: np.ndarray, start: int) -> Optional[int]:
    t = start
    for _ in range(mesh.n_triangles + 1):
        bary = barycentric(mesh, t, p)
        i = int(np.argmin(bary))
        if bary[i] >= -BARY_TOL:
            return t
        nb = int(mesh.neighbors[t, i])
        if nb < 0:
            return None
        t = nb
    return None


def _candidate_bary(mesh: TriMesh, candidates: np.ndarray, p: np.ndarray) -> np.ndarray:
    v = mesh.vertices[mesh.triangles[candidates]]
    area2 = _cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    l0 = _cross(v[:, 1] - p, v[:, 2] - p) / area2
    l1 = _cross(v[:, 2] - p, v[:, 0] - p) / area2
    return np.column_stack([l0, l1, 1.0 - l0 - l1])


def _lowest_containing(mesh: TriMesh, p: np.ndarray, found: int) -> int:
    # Any other triangle containing p shares a vertex with the one found
    star = np.unique(np.concatenate([mesh.vertex_triangles(v) for v in mesh.triangles[found]]))
    inside = star[_candidate_bary(mesh, star, p).min(axis=1) >= -BARY_TOL]
    return int(inside.min()) if inside.size else found


def _scan(mesh: TriMesh, p: np.ndarray) -> Optional[int]:
    everything = np.arange(mesh.n_triangles)
    inside = np.nonzero(_candidate_bary(mesh, everything, p).min(axis=1) >= -BARY_TOL)[0]
    return int(inside[0]) if inside.size else None


# Transfer ----------------------------------------------------------------------

def interpolation_weights(old_mesh: TriMesh, points: Any) -> Tuple[np.ndarray, np.ndarray]:
    """Vertex indices (n, 3) and P1 weights (n, 3) of points in old_mesh.

    Points just outside the domain (round-off from remeshing) are projected
    onto the nearest boundary edge.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    tris, weights = locate_points(old_mesh, pts, strict=False)
    idx = old_mesh.triangles[np.maximum(tris, 0)].astype(np.int64)
    for k in np.nonzero(tris < 0)[0]:
        a, b, s = _project_to_boundary(old_mesh, pts[k])
        idx[k] = (a, b, b)
        weights[k] = (1.0 - s, s, 0.0)
    return idx, weights


def transfer_field(field: NodalScalarField, old_mesh: TriMesh, new_mesh: TriMesh) -> NodalScalarField:
    """P1-interpolate a field from old_mesh onto the vertices of new_mesh."""
    if field.values.size != old_mesh.n_vertices:
        raise FieldError("Field is not bound to the old mesh")
    idx, weights = interpolation_weights(old_mesh, new_mesh.vertices)
    values = np.sum(field.values[idx] * weights, axis=1)
    return NodalScalarField(new_mesh, values)


def _project_to_boundary(mesh: TriMesh, p: np.ndarray) -> Tuple[int, int, float]:
    a = mesh.vertices[mesh.boundary_edges[:, 0]]
    b = mesh.vertices[mesh.boundary_edges[:, 1]]
    ab = b - a
    s = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    dist = np.linalg.norm(a + s[:, None] * ab - p, axis=1)
    k = int(np.argmin(dist))
    if dist[k] > PROJECTION_TOL * mesh.diameter:
        raise PointOutsideDomainError(p)
    logger.debug(f"Projected point {p.tolist()} onto boundary edge {k} (distance {dist[k]:.2e})")
    i, j = mesh.boundary_edges[k]
    return int(i), int(j), float(s[k])


# Validation --------------------------------------------------------------------

def _analyse(
    verts: np.ndarray,
    tris: np.ndarray,
    boundary_edges: Optional[Iterable[Any]],
    fix_orientation: bool,
) -> Dict[str, np.ndarray]:
    """Check all invariants and derive adjacency, boundary and flags."""
    nv, nt = verts.shape[0], tris.shape[0]
    diam = _diameter(verts)
    if diam <= 0.0:
        raise DegenerateTriangleError("All vertices coincide")

    # Orientation and degeneracy
    p = verts[tris]
    signed = 0.5 * _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    degenerate = np.abs(signed) <= DEGENERATE_TOL * diam * diam
    if np.any(degenerate):
        t = int(np.nonzero(degenerate)[0][0])
        raise DegenerateTriangleError(f"Triangle {t} {tris[t].tolist()} has area {signed[t]:.3e}")
    clockwise = signed < 0
    if np.any(clockwise):
        if not fix_orientation:
            raise MeshValidationError(f"{int(clockwise.sum())} triangles are oriented clockwise")
        tris = tris.copy()
        tris[clockwise] = tris[clockwise][:, [0, 2, 1]]

    # Dangling and duplicate entities
    used = np.bincount(tris.ravel(), minlength=nv)
    if np.any(used == 0):
        v = int(np.nonzero(used == 0)[0][0])
        raise DanglingVertexError(f"Vertex {v} is not used by any triangle")
    if np.unique(np.sort(tris, axis=1), axis=0).shape[0] != nt:
        raise DuplicateTriangleError("Mesh contains duplicate triangles")
    close = cKDTree(verts).query_pairs(r=DUPLICATE_TOL * diam)
    if close:
        a, b = sorted(close)[0]
        raise DuplicateVertexError(f"Vertices {a} and {b} coincide")

    # Edges and adjacency
    half = tris[:, LOCAL_EDGES].reshape(-1, 2)
    keys = np.sort(half, axis=1)
    order = np.lexsort((keys[:, 1], keys[:, 0]))
    sorted_keys = keys[order]
    change = np.any(sorted_keys[1:] != sorted_keys[:-1], axis=1)
    starts = np.concatenate([[0], np.nonzero(change)[0] + 1])
    counts = np.diff(np.append(starts, keys.shape[0]))
    if np.any(counts > 2):
        e = sorted_keys[starts[int(np.argmax(counts))]]
        raise NonConformingError(f"Edge {e.tolist()} is shared by more than two triangles")
    edges = sorted_keys[starts]

    neighbors = np.full(3 * nt, -1, dtype=np.int64)
    shared = starts[counts == 2]
    h0, h1 = order[shared], order[shared + 1]
    if np.any(np.any(half[h0] != half[h1][:, ::-1], axis=1)):
        raise NonConformingError("Overlapping triangles: a shared edge is traversed twice in the same direction")
    neighbors[h0] = h1 // 3
    neighbors[h1] = h0 // 3
    neighbors = neighbors.reshape(nt, 3)

    bnd_half = half[order[starts[counts == 1]]]
    bnd_half = bnd_half[np.lexsort((bnd_half[:, 1], bnd_half[:, 0]))]

    # Boundary loops: one outgoing and one incoming edge per boundary vertex
    out_deg = np.bincount(bnd_half[:, 0], minlength=nv)
    in_deg = np.bincount(bnd_half[:, 1], minlength=nv)
    if np.any(out_deg > 1) or np.any(in_deg != out_deg):
        raise NonConformingError("Boundary edges do not form simple closed loops")

    corner_geom = _geometric_corners(verts, bnd_half, nv)
    if boundary_edges is None:
        tags = _derive_tags(bnd_half, corner_geom)
    else:
        tags = _match_tags(bnd_half, boundary_edges)

    flags = np.full(nv, VertexFlag.INTERIOR, dtype=np.int8)
    flags[bnd_half[:, 0]] = VertexFlag.BOUNDARY
    incoming_tag = np.zeros(nv, dtype=np.int64)
    outgoing_tag = np.zeros(nv, dtype=np.int64)
    incoming_tag[bnd_half[:, 1]] = tags
    outgoing_tag[bnd_half[:, 0]] = tags
    on_boundary = flags == VertexFlag.BOUNDARY
    corner = on_boundary & (corner_geom | (incoming_tag != outgoing_tag))
    flags[corner] = VertexFlag.CORNER

    return {
        "vertices": verts,
        "triangles": tris,
        "boundary_edges": bnd_half,
        "boundary_tags": tags,
        "vertex_flags": flags,
        "neighbors": neighbors,
        "edges": edges,
    }


def _geometric_corners(verts: np.ndarray, bnd: np.ndarray, nv: int) -> np.ndarray:
    """Boundary vertices where the incoming and outgoing edges are not collinear."""
    incoming = np.zeros((nv, 2))
    outgoing = np.zeros((nv, 2))
    incoming[bnd[:, 1]] = verts[bnd[:, 1]] - verts[bnd[:, 0]]
    outgoing[bnd[:, 0]] = verts[bnd[:, 1]] - verts[bnd[:, 0]]
    scale = np.linalg.norm(incoming, axis=1) * np.linalg.norm(outgoing, axis=1)
    turn = np.abs(_cross(incoming, outgoing)) > COLLINEAR_TOL * scale
    backwards = np.einsum("ij,ij->i", incoming, outgoing) < 0
    return (turn | backwards) & (scale > 0)


def _derive_tags(bnd: np.ndarray, corner_geom: np.ndarray) -> np.ndarray:
    """One tag per straight boundary segment, numbered loop by loop from 1."""
    edge_from = {int(a): k for k, a in enumerate(bnd[:, 0])}
    tags = np.zeros(bnd.shape[0], dtype=np.int64)
    seen = np.zeros(bnd.shape[0], dtype=bool)
    tag = 0
    for first in range(bnd.shape[0]):
        if seen[first]:
            continue
        loop: List[int] = []
        k = first
        while not seen[k]:
            seen[k] = True
            loop.append(k)
            k = edge_from[int(bnd[k, 1])]
        corners = [pos for pos, e in enumerate(loop) if corner_geom[bnd[e, 0]]]
        if corners:
            begin = min(corners, key=lambda pos: bnd[loop[pos], 0])
            loop = loop[begin:] + loop[:begin]
        tag += 1
        for pos, e in enumerate(loop):
            if pos > 0 and corner_geom[bnd[e, 0]]:
                tag += 1
            tags[e] = tag
    return tags


def _match_tags(bnd: np.ndarray, boundary_edges: Iterable[Any]) -> np.ndarray:
    given: Dict[Tuple[int, int], int] = {}
    for item in boundary_edges:
        a, b, tag = _unpack_boundary_item(item)
        given[(min(a, b), max(a, b))] = tag
    keys = [(int(min(a, b)), int(max(a, b))) for a, b in bnd]
    missing = [k for k in keys if k not in given]
    if missing:
        raise NonConformingError(f"Boundary edge {list(missing[0])} has no tag")
    extra = set(given) - set(keys)
    if extra:
        raise NonConformingError(f"Edge {list(sorted(extra)[0])} is tagged but is not on the boundary")
    return np.array([given[k] for k in keys], dtype=np.int64)


def _unpack_boundary_item(item: Sequence[Any]) -> Tuple[int, int, int]:
    if len(item) == 3:
        a, b, tag = item
    elif len(item) == 2:
        (a, b), tag = item
    else:
        raise MeshValidationError(f"Cannot read boundary edge entry {item!r}")
    return int(a), int(b), int(tag)


def _diameter(verts: np.ndarray) -> float:
    return float(np.linalg.norm(verts.max(axis=0) - verts.min(axis=0)))


def _cross(a: np.ndarray, b: np.ndarray) -> Any:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array)
    array.setflags(write=False)
    return array
