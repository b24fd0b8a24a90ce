"""
Remesher - Local metric-driven remeshing by edge split, edge collapse, edge
flip and vertex smoothing.

The ``Remesher`` keeps a mutable copy of the mesh in plain Python lists and
samples the metric from a background ``NodalTensorField`` whenever a vertex is
created or moved. ``to_mesh`` renumbers the surviving entities and rebuilds a
validated ``TriMesh``.
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np

from .mesh import BARY_TOL, TriMesh, VertexFlag, build_mesh, interpolation_weights
from .tensor import NodalTensorField, clamp_spd_entries
from ..utils.logger import get_logger

logger = get_logger(__name__)

SQRT2 = math.sqrt(2.0)
QUALITY_SCALE = 4.0 * math.sqrt(3.0)
MIN_AREA_RATIO = 0.1
AREA_TOL = 1e-12
INCIRCLE_TOL = 1e-12
BOUNDARY_SLIDE = (0.25, 0.75)
# Longest metric edge a collapse may create
COLLAPSE_LIMIT = 1.2

Tensor = Tuple[float, float, float]
Edge = Tuple[int, int]


def _key(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


def _area2(p: List[float], q: List[float], r: List[float]) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _qform(m: Tensor, ex: float, ey: float) -> float:
    return m[0] * ex * ex + 2.0 * m[1] * ex * ey + m[2] * ey * ey


@dataclass
class RemeshStats:
    """Operation counts of one sweep."""
    splits: int = 0
    collapses: int = 0
    flips: int = 0
    moves: int = 0

    @property
    def topological(self) -> int:
        return self.splits + self.collapses + self.flips


class _MetricSampler:
    """Fast barycentric walk over the background mesh of a metric field."""

    def __init__(self, field: NodalTensorField) -> None:
        mesh = field.mesh
        self.field = field
        self.xy: List[List[float]] = mesh.vertices.tolist()
        self.tris: List[List[int]] = mesh.triangles.tolist()
        self.nbrs: List[List[int]] = mesh.neighbors.tolist()
        self.entries: List[List[float]] = field.entries.tolist()
        self.first_tri: List[int] = [int(mesh.vertex_triangles(v)[0]) for v in range(mesh.n_vertices)]

    def sample(self, x: float, y: float, hint: int) -> Tuple[Tensor, int]:
        t = hint if 0 <= hint < len(self.tris) else 0
        for _ in range(len(self.tris) + 1):
            i0, i1, i2 = self.tris[t]
            p0, p1, p2 = self.xy[i0], self.xy[i1], self.xy[i2]
            d = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
            l0 = ((p1[0] - x) * (p2[1] - y) - (p1[1] - y) * (p2[0] - x)) / d
            l1 = ((p2[0] - x) * (p0[1] - y) - (p2[1] - y) * (p0[0] - x)) / d
            l2 = 1.0 - l0 - l1
            lmin = min(l0, l1, l2)
            if lmin >= -BARY_TOL:
                e0, e1, e2 = self.entries[i0], self.entries[i1], self.entries[i2]
                m = tuple(l0 * e0[k] + l1 * e1[k] + l2 * e2[k] for k in range(3))
                return self._spd(m), t
            side = 0 if lmin == l0 else (1 if lmin == l1 else 2)
            nb = self.nbrs[t][side]
            if nb < 0:
                break
            t = nb
        # Walk left a non-convex domain or hit round-off: use the robust path
        idx, weights = interpolation_weights(self.field.mesh, [[x, y]])
        m = tuple(float(v) for v in weights[0] @ self.field.entries[idx[0]])
        return self._spd(m), hint

    @staticmethod
    def _spd(m: Tuple[float, ...]) -> Tensor:
        if m[0] > 0.0 and m[0] * m[2] - m[1] * m[1] > 0.0:
            return (m[0], m[1], m[2])
        fixed = clamp_spd_entries(np.array(m, dtype=float))
        return (float(fixed[0]), float(fixed[1]), float(fixed[2]))


class Remesher:
    """Mutable working copy of a mesh driven by a background metric."""

    def __init__(self, mesh: TriMesh, metric_field: NodalTensorField) -> None:
        self.sampler = _MetricSampler(metric_field)
        self.pts: List[List[float]] = mesh.vertices.tolist()
        self.flags: List[int] = [int(f) for f in mesh.vertex_flags]
        self.alive: List[bool] = [True] * mesh.n_vertices
        self.tris: List[Optional[Tuple[int, int, int]]] = [tuple(t) for t in mesh.triangles.tolist()]
        self.v2t: List[Set[int]] = [set() for _ in range(mesh.n_vertices)]
        for t, tri in enumerate(self.tris):
            for v in tri:
                self.v2t[v].add(t)
        self.bnd: Dict[Edge, int] = {
            _key(int(a), int(b)): int(tag) for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags)
        }
        self.area_tol = AREA_TOL * mesh.diameter ** 2

        if metric_field.mesh is mesh:
            self.metric: List[Tensor] = [tuple(e) for e in metric_field.entries.tolist()]
            self.hint: List[int] = list(self.sampler.first_tri)
        else:
            self.metric = []
            self.hint = []
            for x, y in self.pts:
                m, t = self.sampler.sample(x, y, self.hint[-1] if self.hint else 0)
                self.metric.append(m)
                self.hint.append(t)

    # Queries -------------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return sum(self.alive)

    @property
    def n_triangles(self) -> int:
        return sum(1 for t in self.tris if t is not None)

    def edges(self) -> List[Edge]:
        found: Set[Edge] = set()
        for tri in self.tris:
            if tri is None:
                continue
            a, b, c = tri
            found.add(_key(a, b))
            found.add(_key(b, c))
            found.add(_key(c, a))
        return sorted(found)

    def neighbors(self, v: int) -> Set[int]:
        out: Set[int] = set()
        for t in self.v2t[v]:
            out.update(self.tris[t])
        out.discard(v)
        return out

    def boundary_neighbors(self, v: int, candidates: Optional[Iterable[int]] = None) -> List[int]:
        """Neighbors joined to v by a boundary edge."""
        pool = self.neighbors(v) if candidates is None else candidates
        return sorted(w for w in pool if _key(v, w) in self.bnd)

    def length(self, a: int, b: int) -> float:
        """Endpoint-average metric length of edge a-b."""
        ex = self.pts[b][0] - self.pts[a][0]
        ey = self.pts[b][1] - self.pts[a][1]
        return 0.5 * (math.sqrt(max(_qform(self.metric[a], ex, ey), 0.0))
                      + math.sqrt(max(_qform(self.metric[b], ex, ey), 0.0)))

    def _length_at(self, p: List[float], mp: Tensor, w: int) -> float:
        ex = self.pts[w][0] - p[0]
        ey = self.pts[w][1] - p[1]
        return 0.5 * (math.sqrt(max(_qform(mp, ex, ey), 0.0))
                      + math.sqrt(max(_qform(self.metric[w], ex, ey), 0.0)))

    def _quality(self, tri: Tuple[int, int, int], v: int = -1,
                 pv: Optional[List[float]] = None, mv: Optional[Tensor] = None) -> float:
        """Metric quality of a triangle, optionally with vertex v at a trial position."""
        pts = [pv if i == v else self.pts[i] for i in tri]
        mets = [mv if i == v else self.metric[i] for i in tri]
        m = tuple((mets[0][k] + mets[1][k] + mets[2][k]) / 3.0 for k in range(3))
        det = m[0] * m[2] - m[1] * m[1]
        area = 0.5 * _area2(pts[0], pts[1], pts[2])
        total = 0.0
        for i in range(3):
            p, q = pts[i], pts[(i + 1) % 3]
            total += _qform(m, q[0] - p[0], q[1] - p[1])
        if total <= 0.0:
            return 0.0
        return QUALITY_SCALE * area * math.sqrt(max(det, 0.0)) / total

    def _third(self, t: int, a: int, b: int) -> int:
        for v in self.tris[t]:
            if v != a and v != b:
                return v
        raise ValueError(f"Triangle {t} has no third vertex for edge ({a}, {b})")

    def _add_vertex(self, p: List[float], flag: int, hint: int) -> int:
        m, t = self.sampler.sample(p[0], p[1], hint)
        self.pts.append(p)
        self.flags.append(flag)
        self.alive.append(True)
        self.v2t.append(set())
        self.metric.append(m)
        self.hint.append(t)
        return len(self.pts) - 1

    # Split ---------------------------------------------------------------------

    def split_pass(self, threshold: float) -> int:
        """Bisect every edge longer than ``threshold``, longest first."""
        candidates = [(self.length(a, b), a, b) for a, b in self.edges()]
        candidates = sorted((c for c in candidates if c[0] > threshold), key=lambda c: (-c[0], c[1], c[2]))
        count = 0
        for _, a, b in candidates:
            if not (self.v2t[a] & self.v2t[b]):
                continue
            self._split(a, b)
            count += 1
        return count

    def _split(self, a: int, b: int) -> int:
        key = _key(a, b)
        tag = self.bnd.get(key)
        pa, pb = self.pts[a], self.pts[b]
        mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        flag = VertexFlag.INTERIOR if tag is None else VertexFlag.BOUNDARY
        m = self._add_vertex(mid, int(flag), self.hint[a])
        for t in sorted(self.v2t[a] & self.v2t[b]):
            tri = self.tris[t]
            i = tri.index(a)
            # Orient the shared edge as it runs inside this triangle
            if tri[(i + 1) % 3] == b:
                p, q = a, b
            else:
                p, q = b, a
            c = self._third(t, a, b)
            self.tris[t] = (p, m, c)
            new = len(self.tris)
            self.tris.append((m, q, c))
            self.v2t[q].discard(t)
            self.v2t[q].add(new)
            self.v2t[c].add(new)
            self.v2t[m].update((t, new))
        if tag is not None:
            del self.bnd[key]
            self.bnd[_key(a, m)] = tag
            self.bnd[_key(m, b)] = tag
        return m

    # Collapse ------------------------------------------------------------------

    def collapse_pass(self, threshold: float, max_length: float = COLLAPSE_LIMIT) -> int:
        """Collapse edges shorter than ``threshold``, shortest first.

        A collapse is rejected when any edge it creates would be longer than
        ``max_length``.
        """
        candidates = [(self.length(a, b), a, b) for a, b in self.edges()]
        candidates = sorted(c for c in candidates if c[0] < threshold)
        count = 0
        for _, a, b in candidates:
            if not (self.alive[a] and self.alive[b]) or not (self.v2t[a] & self.v2t[b]):
                continue
            options = []
            for r, k in ((a, b), (b, a)):
                if self.flags[r] == VertexFlag.CORNER:
                    continue
                if self.flags[r] == VertexFlag.BOUNDARY and _key(r, k) not in self.bnd:
                    continue
                options.append((r, k))
            options.sort(key=lambda o: self.flags[o[0]] != VertexFlag.INTERIOR)
            for r, k in options:
                if self._try_collapse(r, k, max_length):
                    count += 1
                    break
        return count

    def _merge_point(self, r: int, k: int) -> List[float]:
        """Where k ends up when r is merged into it."""
        if self.flags[k] == VertexFlag.CORNER:
            return self.pts[k]
        if self.flags[k] == VertexFlag.BOUNDARY and _key(r, k) not in self.bnd:
            return self.pts[k]
        # Both interior, or both on one straight boundary segment
        pr, pk = self.pts[r], self.pts[k]
        return [0.5 * (pr[0] + pk[0]), 0.5 * (pr[1] + pk[1])]

    def _try_collapse(self, r: int, k: int, max_length: float) -> bool:
        """Remove r by merging it into k if the result stays valid."""
        shared = self.v2t[r] & self.v2t[k]
        opposite = {self._third(t, r, k) for t in shared}
        rim = self.neighbors(r)
        if (rim & self.neighbors(k)) != opposite:
            return False
        pk = self._merge_point(r, k)
        if pk is self.pts[k]:
            mk, hint = self.metric[k], self.hint[k]
        else:
            mk, hint = self.sampler.sample(pk[0], pk[1], self.hint[k])
        moved = sorted(self.v2t[r] - shared)
        kept = sorted(self.v2t[k] - shared) if pk is not self.pts[k] else []
        for t in moved + kept:
            tri = tuple(k if v == r else v for v in self.tris[t])
            corners = [pk if v == k else self.pts[v] for v in tri]
            if 0.5 * _area2(corners[0], corners[1], corners[2]) <= self.area_tol:
                return False
            for w in tri:
                if w != k and self._length_at(pk, mk, w) > max_length:
                    return False

        for t in shared:
            for v in self.tris[t]:
                self.v2t[v].discard(t)
            self.tris[t] = None
        for t in moved:
            self.tris[t] = tuple(k if v == r else v for v in self.tris[t])
            self.v2t[k].add(t)
        self.v2t[r] = set()
        self.alive[r] = False
        self.pts[k] = pk
        self.metric[k] = mk
        self.hint[k] = hint
        for w in self.boundary_neighbors(r, rim):
            tag = self.bnd.pop(_key(r, w))
            if w != k:
                self.bnd[_key(k, w)] = tag
        return True

    # Flip ----------------------------------------------------------------------

    def flip_pass(self) -> int:
        """Flip interior edges that fail the metric in-circle test."""
        count = 0
        for a, b in self.edges():
            if _key(a, b) in self.bnd:
                continue
            shared = sorted(self.v2t[a] & self.v2t[b])
            if len(shared) != 2:
                continue
            t1, t2 = shared
            tri = self.tris[t1]
            i = tri.index(a)
            if tri[(i + 1) % 3] != b:
                t1, t2 = t2, t1
            c = self._third(t1, a, b)
            d = self._third(t2, a, b)
            if d in self.neighbors(c):
                continue
            if self._should_flip(a, b, c, d):
                self._flip(t1, t2, a, b, c, d)
                count += 1
        return count

    def _should_flip(self, a: int, b: int, c: int, d: int) -> bool:
        pa, pb, pc, pd = (self.pts[v] for v in (a, b, c, d))
        if _area2(pa, pd, pc) <= 2.0 * self.area_tol or _area2(pd, pb, pc) <= 2.0 * self.area_tol:
            return False
        m = [sum(self.metric[v][k] for v in (a, b, c, d)) / 4.0 for k in range(3)]
        # Upper Cholesky factor S with S^T S = M maps the metric to the Euclidean plane
        s11 = math.sqrt(m[0])
        s12 = m[1] / s11
        s22 = math.sqrt(max(m[2] - s12 * s12, 0.0))
        if s22 == 0.0:
            return False

        def tr(p: List[float]) -> Tuple[float, float]:
            return s11 * (p[0] - pd[0]) + s12 * (p[1] - pd[1]), s22 * (p[1] - pd[1])

        (ax, ay), (bx, by), (cx, cy) = tr(pa), tr(pb), tr(pc)
        al, bl, cl = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
        t_a = al * (bx * cy - by * cx)
        t_b = bl * (cx * ay - cy * ax)
        t_c = cl * (ax * by - ay * bx)
        det = t_a + t_b + t_c
        scale = abs(t_a) + abs(t_b) + abs(t_c)
        return det > INCIRCLE_TOL * scale

    def _flip(self, t1: int, t2: int, a: int, b: int, c: int, d: int) -> None:
        self.tris[t1] = (a, d, c)
        self.tris[t2] = (d, b, c)
        self.v2t[a].discard(t2)
        self.v2t[b].discard(t1)
        self.v2t[c].add(t2)
        self.v2t[d].add(t1)

    # Smooth --------------------------------------------------------------------

    def smooth_pass(self) -> int:
        """Move vertices toward the metric-length-weighted average of their neighbors."""
        moves = 0
        for v in range(len(self.pts)):
            if not self.alive[v] or self.flags[v] == VertexFlag.CORNER:
                continue
            target = self._smoothing_target(v)
            if target is None:
                continue
            p = self.pts[v]
            for step in (1.0, 0.5):
                trial = [p[0] + step * (target[0] - p[0]), p[1] + step * (target[1] - p[1])]
                if self._try_move(v, trial):
                    moves += 1
                    break
        return moves

    def _smoothing_target(self, v: int) -> Optional[List[float]]:
        nbrs = sorted(self.neighbors(v))
        weights = [self.length(v, w) for w in nbrs]
        total = sum(weights)
        if total <= 0.0:
            return None
        tx = sum(wt * self.pts[w][0] for wt, w in zip(weights, nbrs)) / total
        ty = sum(wt * self.pts[w][1] for wt, w in zip(weights, nbrs)) / total
        if self.flags[v] == VertexFlag.INTERIOR:
            return [tx, ty]
        ends = self.boundary_neighbors(v, nbrs)
        if len(ends) != 2:
            return None
        p, q = self.pts[min(ends)], self.pts[max(ends)]
        dx, dy = q[0] - p[0], q[1] - p[1]
        s = ((tx - p[0]) * dx + (ty - p[1]) * dy) / (dx * dx + dy * dy)
        s = min(max(s, BOUNDARY_SLIDE[0]), BOUNDARY_SLIDE[1])
        return [p[0] + s * dx, p[1] + s * dy]

    def _try_move(self, v: int, trial: List[float]) -> bool:
        if trial == self.pts[v]:
            return False
        mv, hint = self.sampler.sample(trial[0], trial[1], self.hint[v])
        before: List[float] = []
        after: List[float] = []
        for t in self.v2t[v]:
            tri = self.tris[t]
            old_area = 0.5 * _area2(*(self.pts[i] for i in tri))
            new_area = 0.5 * _area2(*(trial if i == v else self.pts[i] for i in tri))
            if new_area < MIN_AREA_RATIO * old_area or new_area <= self.area_tol:
                return False
            before.append(self._quality(tri))
            after.append(self._quality(tri, v, trial, mv))
        # The worst incident element may not get worse, and the sum must not drop
        if min(after) < min(before) or sum(after) < sum(before):
            return False
        self.pts[v] = trial
        self.metric[v] = mv
        self.hint[v] = hint
        return True

    # Driver --------------------------------------------------------------------

    def sweep(self, split_threshold: float, collapse_threshold: float, smoothing_passes: int) -> RemeshStats:
        stats = RemeshStats()
        stats.splits = self.split_pass(split_threshold)
        stats.collapses = self.collapse_pass(collapse_threshold, min(COLLAPSE_LIMIT, split_threshold))
        stats.flips = self.flip_pass()
        for _ in range(smoothing_passes):
            stats.moves += self.smooth_pass()
        return stats

    def to_mesh(self) -> TriMesh:
        """Renumber surviving vertices in order and build a validated TriMesh."""
        index = {}
        vertices = []
        for v, ok in enumerate(self.alive):
            if ok:
                index[v] = len(vertices)
                vertices.append(self.pts[v])
        triangles = [[index[v] for v in tri] for tri in self.tris if tri is not None]
        boundary = [(index[a], index[b], tag) for (a, b), tag in sorted(self.bnd.items())]
        return build_mesh(vertices, triangles, boundary)


def split_long_edges(mesh: TriMesh, metric_field: NodalTensorField, threshold: float = SQRT2) -> TriMesh:
    remesher = Remesher(mesh, metric_field)
    count = remesher.split_pass(threshold)
    logger.debug(f"Split {count} edges")
    return remesher.to_mesh()


def collapse_short_edges(
    mesh: TriMesh,
    metric_field: NodalTensorField,
    threshold: float = 1.0 / SQRT2,
    max_length: float = COLLAPSE_LIMIT,
) -> TriMesh:
    remesher = Remesher(mesh, metric_field)
    count = remesher.collapse_pass(threshold, max_length)
    logger.debug(f"Collapsed {count} edges")
    return remesher.to_mesh()


def flip_edges(mesh: TriMesh, metric_field: NodalTensorField, max_passes: int = 20) -> TriMesh:
    remesher = Remesher(mesh, metric_field)
    for _ in range(max_passes):
        if remesher.flip_pass() == 0:
            break
    return remesher.to_mesh()


def smooth_vertices(mesh: TriMesh, metric_field: NodalTensorField, passes: int = 2) -> TriMesh:
    remesher = Remesher(mesh, metric_field)
    for _ in range(passes):
        remesher.smooth_pass()
    return remesher.to_mesh()
