"""
Adaptive - Remeshing driver and the solve / recover / metric / adapt loop.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .error_metrics import coefficient_of_variation, eta_global
from .exceptions import AdaptationError, AnisomeshError
from .fem import ProblemSpec, fem_solve, true_h1_error
from .mesh import NodalScalarField, TriMesh, transfer_field
from .recovery import h2_error, recover_hessian
from .remesher import SQRT2, RemeshStats, Remesher
from .tensor import (
    EdgeLengthSummary,
    MetricKind,
    MetricParams,
    NodalTensorField,
    build_metric,
    edge_length_summary,
    transfer_tensor_field,
)
from ..utils.logger import get_logger

logger = get_logger(__name__)

UNIT_TRIANGLE_AREA = math.sqrt(3.0) / 4.0
CHANGE_FRACTION = 0.01
FEEDBACK_CLAMP = (0.5, 2.0)


class AdaptConfig(BaseModel):
    """Settings of the adaptive loop and of the remesher."""
    model_config = ConfigDict(frozen=True)

    n_target: int = Field(ge=1)
    iterations: int = Field(default=10, ge=1)
    split_threshold: float = SQRT2
    collapse_threshold: float = 1.0 / SQRT2
    max_local_passes: int = Field(default=20, ge=1)
    smoothing_passes: int = Field(default=2, ge=0)
    metric: MetricKind = MetricKind.NEW_H1
    alpha0: Optional[float] = Field(default=None, gt=0)
    alpha1: Optional[float] = Field(default=None, gt=0)
    initial_coefficient: float = Field(default=UNIT_TRIANGLE_AREA, gt=0)
    feedback: bool = True
    validate_every_sweep: bool = False

    @model_validator(mode="after")
    def _check_thresholds(self) -> "AdaptConfig":
        if not (0.0 < self.collapse_threshold < 1.0 < self.split_threshold):
            raise ValueError(
                f"Thresholds must satisfy 0 < collapse < 1 < split, got "
                f"{self.collapse_threshold} and {self.split_threshold}"
            )
        return self

    @property
    def metric_params(self) -> MetricParams:
        return MetricParams(n_target=self.n_target, alpha0=self.alpha0, alpha1=self.alpha1, kind=self.metric)


@dataclass
class IterationRecord:
    """Measurements taken after one adaptive iteration."""
    iteration: int
    nbt: int
    nv: int
    h1_err: float
    h2_err: float
    eta: float
    cv_eta: float
    delta_u: float
    coefficient: float
    edge_lengths: EdgeLengthSummary

    def to_dict(self) -> dict:
        data = asdict(self)
        data["edge_lengths"] = self.edge_lengths.to_dict()
        return data


@dataclass
class AdaptReport:
    """One record per completed iteration."""
    problem: str = ""
    metric: str = MetricKind.NEW_H1.value
    n_target: int = 0
    records: List[IterationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final(self) -> Optional[IterationRecord]:
        return self.records[-1] if self.records else None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "metric": self.metric,
            "n_target": self.n_target,
            "iterations": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)


class AdaptResult(NamedTuple):
    mesh: TriMesh
    solution: NodalScalarField
    report: AdaptReport


IterationCallback = Callable[[int, TriMesh, NodalScalarField, NodalTensorField, IterationRecord], None]


def adapt_mesh(mesh: TriMesh, metric_field: NodalTensorField, config: AdaptConfig) -> TriMesh:
    """Run remesher sweeps until fewer than 1% of edges change or the pass cap is hit."""
    remesher = Remesher(mesh, metric_field)
    total = RemeshStats()
    for sweep in range(1, config.max_local_passes + 1):
        stats = remesher.sweep(config.split_threshold, config.collapse_threshold, config.smoothing_passes)
        n_edges = len(remesher.edges())
        logger.debug(
            f"Sweep {sweep}: {stats.splits} splits, {stats.collapses} collapses, "
            f"{stats.flips} flips, {stats.moves} moves ({n_edges} edges)"
        )
        total.splits += stats.splits
        total.collapses += stats.collapses
        total.flips += stats.flips
        total.moves += stats.moves
        if config.validate_every_sweep:
            remesher.to_mesh()
        if stats.topological < CHANGE_FRACTION * n_edges:
            break
    adapted = remesher.to_mesh()
    logger.debug(
        f"Adapted {mesh.n_triangles} -> {adapted.n_triangles} triangles in {sweep} sweeps "
        f"({total.splits} splits, {total.collapses} collapses, {total.flips} flips)"
    )
    return adapted


def _exact_errors(problem: ProblemSpec, solution: NodalScalarField, hessian: NodalTensorField,
                  mesh: TriMesh) -> tuple:
    h1 = true_h1_error(solution, problem, mesh) if problem.exact_gradient is not None else math.nan
    h2 = h2_error(hessian, problem, mesh) if problem.exact_hessian is not None else math.nan
    return h1, h2


def _next_coefficient(coefficient: float, n_target: int, nbt: int) -> float:
    ratio = min(max(n_target / max(nbt, 1), FEEDBACK_CLAMP[0]), FEEDBACK_CLAMP[1])
    return coefficient * ratio


def adaptive_solve(
    problem: ProblemSpec,
    initial_mesh: TriMesh,
    config: AdaptConfig,
    on_iteration: Optional[IterationCallback] = None,
) -> AdaptResult:
    """Solve on the initial mesh, then iterate metric, adapt, transfer and solve.

    The metric is scaled by a sizing coefficient that starts at
    ``config.initial_coefficient`` and is corrected by n_target / nbt after
    every iteration, so the element count settles near the target.
    A failing iteration raises ``AdaptationError`` carrying the rows completed
    so far.
    """
    report = AdaptReport(problem=problem.name, metric=config.metric.value, n_target=config.n_target)
    params = config.metric_params
    coefficient = config.initial_coefficient
    mesh = initial_mesh
    try:
        solution = fem_solve(problem, mesh)
    except AnisomeshError as e:
        raise AdaptationError(f"Initial solve failed: {e}", report) from e

    for k in range(1, config.iterations + 1):
        try:
            hessian = recover_hessian(solution, mesh)
            metric = build_metric(hessian, mesh, params, coefficient)
            new_mesh = adapt_mesh(mesh, metric, config)
            previous = transfer_field(solution, mesh, new_mesh)
            new_solution = fem_solve(problem, new_mesh)

            new_hessian = recover_hessian(new_solution, new_mesh)
            estimate = eta_global(new_hessian, new_mesh)
            h1, h2 = _exact_errors(problem, new_solution, new_hessian, new_mesh)
            record = IterationRecord(
                iteration=k,
                nbt=new_mesh.n_triangles,
                nv=new_mesh.n_vertices,
                h1_err=h1,
                h2_err=h2,
                eta=estimate.eta,
                cv_eta=coefficient_of_variation(estimate.per_element),
                delta_u=float(np.max(np.abs(new_solution.values - previous.values))),
                coefficient=coefficient,
                edge_lengths=edge_length_summary(new_mesh, transfer_tensor_field(metric, new_mesh)),
            )
        except AnisomeshError as e:
            logger.error(f"{problem.name}: iteration {k} failed: {e}")
            raise AdaptationError(f"Iteration {k} failed: {e}", report) from e

        report.records.append(record)
        logger.info(
            f"{problem.name} [{config.metric.value}] iteration {k}: nbt={record.nbt} nv={record.nv} "
            f"h1={record.h1_err:.4g} h2={record.h2_err:.4g} eta={record.eta:.4g} cv={record.cv_eta:.3f}"
        )
        if on_iteration is not None:
            on_iteration(k, new_mesh, new_solution, metric, record)

        mesh, solution = new_mesh, new_solution
        if config.feedback:
            coefficient = _next_coefficient(coefficient, config.n_target, record.nbt)

    return AdaptResult(mesh, solution, report)
