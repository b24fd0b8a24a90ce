"""
Recovery - Gradient recovery by area-weighted patch averaging and Hessian recovery.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import FieldError, MissingExactSolutionError
from .fem import ProblemSpec, element_gradients
from .mesh import NodalScalarField, TriMesh
from .quadrature import DEGREE6
from .tensor import NodalTensorField, TensorRole
from ..utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class NodalVectorField:
    """One 2-vector per mesh vertex."""
    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1, 2)
        if values.shape[0] != self.mesh.n_vertices:
            raise FieldError(
                f"Vector field has {values.shape[0]} rows but the mesh has {self.mesh.n_vertices} vertices"
            )
        if not np.all(np.isfinite(values)):
            raise FieldError("Vector field holds non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _average_to_vertices(per_element: np.ndarray, mesh: TriMesh) -> np.ndarray:
    """Area-weighted mean over each vertex patch of a per-triangle (nt, k) array."""
    tris = mesh.triangles.ravel()
    weights = np.repeat(mesh.areas, 3)
    patch_area = np.bincount(tris, weights=weights, minlength=mesh.n_vertices)
    columns = [
        np.bincount(tris, weights=weights * np.repeat(per_element[:, j], 3), minlength=mesh.n_vertices)
        for j in range(per_element.shape[1])
    ]
    return np.column_stack(columns) / patch_area[:, None]


def _recover(values: np.ndarray, mesh: TriMesh) -> np.ndarray:
    return _average_to_vertices(element_gradients(values, mesh), mesh)


def zz_gradient(field: NodalScalarField, mesh: TriMesh) -> NodalVectorField:
    """Nodal gradient as the area-weighted average of incident element gradients."""
    if field.values.size != mesh.n_vertices:
        raise FieldError("Field is not bound to the mesh")
    return NodalVectorField(mesh, _recover(field.values, mesh))


def recover_hessian(field: NodalScalarField, mesh: TriMesh) -> NodalTensorField:
    """Recover the gradient, recover each of its components again, then symmetrize."""
    grad = zz_gradient(field, mesh).values
    dx = _recover(grad[:, 0], mesh)
    dy = _recover(grad[:, 1], mesh)
    entries = np.column_stack([dx[:, 0], 0.5 * (dx[:, 1] + dy[:, 0]), dy[:, 1]])
    return NodalTensorField(mesh, entries, TensorRole.HESSIAN)


def h2_error(recovered_hessian: NodalTensorField, problem: ProblemSpec, mesh: TriMesh) -> float:
    """Integrated Frobenius norm of H_exact - H_rec, H_rec linear on each triangle."""
    if problem.exact_hessian is None:
        raise MissingExactSolutionError(f"{problem.name} has no exact Hessian")
    pts = DEGREE6.physical_points(mesh.vertices[mesh.triangles])
    hxx, hxy, hyy = (np.broadcast_to(np.asarray(v, dtype=float), pts.shape[:2])
                     for v in problem.exact_hessian(pts[..., 0], pts[..., 1]))
    rec = np.einsum("qi,tij->tqj", DEGREE6.points, recovered_hessian.entries[mesh.triangles])
    d11 = hxx - rec[..., 0]
    d12 = hxy - rec[..., 1]
    d22 = hyy - rec[..., 2]
    frob2 = d11 * d11 + 2.0 * d12 * d12 + d22 * d22
    return float(np.sqrt(np.sum(mesh.areas * (frob2 @ DEGREE6.weights))))
