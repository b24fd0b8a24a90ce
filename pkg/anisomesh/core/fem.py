"""
FEM - P1 Galerkin assembly and solution of steady convection-diffusion problems.

Solves  -kappa * lap(u) + b . grad(u) = f  with Dirichlet data on some boundary
tags and homogeneous Neumann conditions on the others. No stabilization is
applied.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .exceptions import MissingExactSolutionError, ProblemError, SolverBreakdownError
from .mesh import NodalScalarField, TriMesh, edge_vectors
from .quadrature import DEGREE6, EDGE_MIDPOINTS
from ..utils.logger import get_logger

logger = get_logger(__name__)

RESIDUAL_TOL = 1e-10
REFINEMENT_STEPS = 3

ScalarCallback = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorCallback = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
HessianCallback = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


def _zero(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.zeros_like(x)


@dataclass(frozen=True)
class ProblemSpec:
    """PDE definition with optional exact-solution callbacks for error reporting.

    Callbacks are vectorized over coordinate arrays. ``exact_hessian`` returns
    (u_xx, u_xy, u_yy).
    """
    kappa: float = 1.0
    convection: Tuple[float, float] = (0.0, 0.0)
    source: ScalarCallback = _zero
    dirichlet: Dict[int, ScalarCallback] = field(default_factory=dict)
    neumann: Tuple[int, ...] = ()
    exact_solution: Optional[ScalarCallback] = None
    exact_gradient: Optional[VectorCallback] = None
    exact_hessian: Optional[HessianCallback] = None
    name: str = "problem"

    def __post_init__(self) -> None:
        if not self.kappa > 0.0:
            raise ProblemError(f"kappa must be positive, got {self.kappa}")
        if len(self.convection) != 2 or not np.all(np.isfinite(self.convection)):
            raise ProblemError("convection must be a finite 2-vector")
        overlap = set(self.dirichlet) & set(self.neumann)
        if overlap:
            raise ProblemError(f"Boundary tags {sorted(overlap)} carry both Dirichlet and Neumann conditions")
        if len(set(self.neumann)) != len(self.neumann):
            raise ProblemError("Neumann tags are listed more than once")

    def check_tags(self, mesh: TriMesh) -> None:
        """Every boundary tag of the mesh must carry exactly one condition."""
        assigned = set(self.dirichlet) | set(self.neumann)
        missing = [t for t in mesh.tag_set if t not in assigned]
        if missing:
            raise ProblemError(f"Boundary tags {missing} have no boundary condition")
        if not self.dirichlet:
            logger.warning(f"{self.name}: no Dirichlet boundary; the system is singular for pure diffusion")


@dataclass(eq=False)
class SparseSystem:
    """Reduced linear system on the free unknowns.

    ``full_matrix``/``full_rhs`` keep the system before Dirichlet elimination.
    """
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    free: Optional[np.ndarray] = None
    fixed: Optional[np.ndarray] = None
    fixed_values: Optional[np.ndarray] = None
    full_matrix: Optional[sparse.csr_matrix] = None
    full_rhs: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.matrix = sparse.csr_matrix(self.matrix)
        self.matrix.sort_indices()
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if self.matrix.shape != (self.rhs.size, self.rhs.size):
            raise ValueError(f"Matrix shape {self.matrix.shape} does not match rhs length {self.rhs.size}")

    @property
    def n(self) -> int:
        return int(self.rhs.size)

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Scatter the reduced solution back into a full nodal vector."""
        if self.free is None:
            return np.asarray(x, dtype=float)
        full = np.empty(self.free.size + self.fixed.size)
        full[self.free] = x
        full[self.fixed] = self.fixed_values
        return full


def basis_gradients(mesh: TriMesh) -> Tuple[np.ndarray, np.ndarray]:
    """P1 basis gradients (nt, 3, 2) and areas; grad(phi_i) = (-l_i,y, l_i,x) / (2|K|)."""
    edges, areas = edge_vectors(mesh)
    grads = np.stack([-edges[..., 1], edges[..., 0]], axis=-1) / (2.0 * areas)[:, None, None]
    return grads, areas


def element_gradients(values: np.ndarray, mesh: TriMesh) -> np.ndarray:
    """Constant gradient of a P1 field on every triangle, shape (nt, 2)."""
    grads, _ = basis_gradients(mesh)
    return np.einsum("tk,tkj->tj", values[mesh.triangles], grads)


def dirichlet_values(problem: ProblemSpec, mesh: TriMesh) -> Tuple[np.ndarray, np.ndarray]:
    """Dirichlet node indices and values; at shared nodes the lowest tag wins."""
    values = np.full(mesh.n_vertices, np.nan)
    for tag in sorted(problem.dirichlet, reverse=True):
        nodes = np.unique(mesh.boundary_edges[mesh.boundary_tags == tag].ravel())
        if nodes.size == 0:
            continue
        x, y = mesh.vertices[nodes, 0], mesh.vertices[nodes, 1]
        values[nodes] = np.broadcast_to(np.asarray(problem.dirichlet[tag](x, y), dtype=float), x.shape)
    fixed = np.nonzero(~np.isnan(values))[0]
    return fixed, values[fixed]


def assemble(problem: ProblemSpec, mesh: TriMesh) -> SparseSystem:
    """Assemble stiffness, convection and load, then eliminate Dirichlet rows symmetrically."""
    problem.check_tags(mesh)
    nv = mesh.n_vertices
    grads, areas = basis_gradients(mesh)
    tris = mesh.triangles

    local = problem.kappa * areas[:, None, None] * np.einsum("tik,tjk->tij", grads, grads)
    b = np.asarray(problem.convection, dtype=float)
    if np.any(b != 0.0):
        # int (b . grad phi_j) phi_i = (b . grad phi_j) |K| / 3
        advect = (grads @ b) * (areas / 3.0)[:, None]
        local = local + advect[:, None, :]

    rows = np.broadcast_to(tris[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(tris[:, None, :], local.shape).ravel()
    full = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    full.sum_duplicates()
    full.sort_indices()

    # Edge-midpoint rule: b_i = |K|/6 * (f at the two midpoints on edges through i)
    mid = EDGE_MIDPOINTS.physical_points(mesh.vertices[tris])
    fm = np.broadcast_to(np.asarray(problem.source(mid[..., 0], mid[..., 1]), dtype=float), mid.shape[:2])
    loads = (areas / 6.0)[:, None] * (fm.sum(axis=1)[:, None] - fm)
    full_rhs = np.bincount(tris.ravel(), weights=loads.ravel(), minlength=nv)

    fixed, fixed_values = dirichlet_values(problem, mesh)
    free_mask = np.ones(nv, dtype=bool)
    free_mask[fixed] = False
    free = np.nonzero(free_mask)[0]
    reduced = full[free][:, free]
    rhs = full_rhs[free] - full[free][:, fixed] @ fixed_values
    logger.debug(f"Assembled {problem.name}: {nv} nodes, {free.size} free, nnz={full.nnz}")
    return SparseSystem(
        matrix=reduced,
        rhs=rhs,
        free=free,
        fixed=fixed,
        fixed_values=fixed_values,
        full_matrix=full,
        full_rhs=full_rhs,
    )


def solve_system(system: SparseSystem) -> np.ndarray:
    """Sparse LU with iterative refinement; residual <= 1e-10 * ||b||."""
    if system.n == 0:
        return np.zeros(0)
    b = system.rhs
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros(system.n)
    try:
        lu = splu(system.matrix.tocsc())
    except RuntimeError as e:
        raise SolverBreakdownError(float("inf"), f"Sparse LU factorization failed: {e}")
    x = lu.solve(b)
    residual = np.inf
    for step in range(REFINEMENT_STEPS + 1):
        r = b - system.matrix @ x
        residual = float(np.linalg.norm(r)) / norm_b
        if not np.isfinite(residual):
            break
        if residual <= RESIDUAL_TOL:
            return x
        if step < REFINEMENT_STEPS:
            x = x + lu.solve(r)
    raise SolverBreakdownError(residual)


def fem_solve(problem: ProblemSpec, mesh: TriMesh) -> NodalScalarField:
    system = assemble(problem, mesh)
    return NodalScalarField(mesh, system.expand(solve_system(system)))


def true_h1_error(solution: NodalScalarField, problem: ProblemSpec, mesh: TriMesh) -> float:
    """|u - u_h|_{H1} with the degree-6 rule on every triangle."""
    if problem.exact_gradient is None:
        raise MissingExactSolutionError(f"{problem.name} has no exact gradient")
    uh_grad = element_gradients(solution.values, mesh)
    pts = DEGREE6.physical_points(mesh.vertices[mesh.triangles])
    gx, gy = (np.broadcast_to(np.asarray(g, dtype=float), pts.shape[:2])
              for g in problem.exact_gradient(pts[..., 0], pts[..., 1]))
    dx = gx - uh_grad[:, 0:1]
    dy = gy - uh_grad[:, 1:2]
    local = mesh.areas * ((dx * dx + dy * dy) @ DEGREE6.weights)
    return float(np.sqrt(np.sum(local)))
