"""
Experiment - Benchmark runs on the unit square with artifacts written to disk.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .adaptive import AdaptConfig, AdaptReport, IterationCallback, IterationRecord, adaptive_solve
from .exceptions import AdaptationError
from .mesh import NodalScalarField, TriMesh, structured_unit_square
from .remesher import SQRT2
from .tensor import MetricKind, NodalTensorField, transfer_tensor_field
from ..problems import get_problem
from ..ui.svg import render_svg
from ..utils.logger import get_logger
from ..utils.medit import save_mesh, save_sol
from ..utils.report import emit_csv, emit_sweep_csv, write_summary

logger = get_logger(__name__)

ExampleId = Literal["ex1", "ex2", "ex3"]

DEFAULT_SWEEP_TARGETS = (250, 500, 1000, 2000, 4000)

_PARAMETER_OWNER = {"kappa": "ex1", "alpha": "ex2", "beta": "ex3"}


class ExperimentSpec(BaseModel):
    """One adaptive run of a benchmark problem."""
    model_config = ConfigDict(frozen=True)

    example: ExampleId = "ex2"
    kappa: Optional[float] = Field(default=None, gt=0)
    alpha: Optional[float] = Field(default=None, gt=0)
    beta: Optional[float] = Field(default=None, ge=2)
    allow_any_beta: bool = False
    metric: MetricKind = MetricKind.NEW_H1
    n_target: int = Field(default=4000, ge=1)
    iterations: int = Field(default=10, ge=1)
    initial_n: int = Field(default=16, ge=1)
    alpha0: Optional[float] = Field(default=None, gt=0)
    alpha1: Optional[float] = Field(default=None, gt=0)
    split_threshold: float = SQRT2
    collapse_threshold: float = 1.0 / SQRT2
    max_local_passes: int = Field(default=20, ge=1)
    smoothing_passes: int = Field(default=2, ge=0)
    validate_every_sweep: bool = False
    output_dir: Optional[Path] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "ExperimentSpec":
        for name, owner in _PARAMETER_OWNER.items():
            if getattr(self, name) is not None and owner != self.example:
                raise ValueError(f"{name} applies to {owner} only, not {self.example}")
        if self.example == "ex3" and self.beta is not None and not self.allow_any_beta:
            studied = get_problem("ex3").studied
            if self.beta not in studied:
                raise ValueError(
                    f"beta must be one of {', '.join(f'{b:g}' for b in studied)} "
                    f"(pass allow_any_beta to override), got {self.beta:g}"
                )
        return self

    @property
    def parameter_name(self) -> str:
        return get_problem(self.example).parameter

    @property
    def parameter(self) -> float:
        """Shape parameter of the example, its default when unset."""
        value = getattr(self, self.parameter_name)
        return get_problem(self.example).resolve(value)

    def adapt_config(self) -> AdaptConfig:
        return AdaptConfig(
            n_target=self.n_target,
            iterations=self.iterations,
            split_threshold=self.split_threshold,
            collapse_threshold=self.collapse_threshold,
            max_local_passes=self.max_local_passes,
            smoothing_passes=self.smoothing_passes,
            metric=self.metric,
            alpha0=self.alpha0,
            alpha1=self.alpha1,
            validate_every_sweep=self.validate_every_sweep,
        )

    def label(self) -> str:
        return f"{self.example}({self.parameter_name}={self.parameter:g}) {self.metric.cli_name} N={self.n_target}"


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    report: AdaptReport
    mesh: TriMesh
    solution: NodalScalarField
    artifacts: List[Path] = field(default_factory=list)


class _ArtifactWriter:
    """Per-iteration mesh, picture, metric and solution files."""

    def __init__(self, directory: Path) -> None:
        self.directory = directory
        self.written: List[Path] = []

    def _path(self, name: str) -> Path:
        path = self.directory / name
        self.written.append(path)
        return path

    def __call__(self, k: int, mesh: TriMesh, solution: NodalScalarField,
                 metric: NodalTensorField, record: IterationRecord) -> None:
        save_mesh(mesh, self._path(f"mesh_iter_{k}.mesh"))
        self._path(f"mesh_iter_{k}.svg").write_text(render_svg(mesh))
        # The metric lives on the previous mesh; store it on the one it produced
        save_sol(transfer_tensor_field(metric, mesh).entries, self._path(f"metric_iter_{k}.sol"))
        save_sol(solution.values, self._path(f"solution_iter_{k}.sol"))

    def finish(self, report: AdaptReport, spec: ExperimentSpec, status: str) -> None:
        self._path("report.csv").write_text(emit_csv(report))
        write_summary(
            report,
            self._path("summary.json"),
            example=spec.example,
            parameter={spec.parameter_name: spec.parameter},
            status=status,
            settings=spec.adapt_config().model_dump(mode="json"),
        )


def run_experiment(spec: ExperimentSpec, on_iteration: Optional[IterationCallback] = None) -> ExperimentResult:
    """Build the problem, run the adaptive loop and write artifacts when ``output_dir`` is set.

    On failure the partial report is still written before the error propagates.
    """
    problem = get_problem(spec.example).build(spec.parameter)
    initial = structured_unit_square(spec.initial_n)
    writer: Optional[_ArtifactWriter] = None
    if spec.output_dir is not None:
        directory = Path(spec.output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        writer = _ArtifactWriter(directory)

    def callback(k: int, mesh: TriMesh, solution: NodalScalarField,
                 metric: NodalTensorField, record: IterationRecord) -> None:
        if writer is not None:
            writer(k, mesh, solution, metric, record)
        if on_iteration is not None:
            on_iteration(k, mesh, solution, metric, record)

    logger.info(f"Running {spec.label()}")
    try:
        mesh, solution, report = adaptive_solve(problem, initial, spec.adapt_config(), on_iteration=callback)
    except AdaptationError as e:
        if writer is not None and isinstance(e.report, AdaptReport):
            writer.finish(e.report, spec, status=f"failed: {e}")
        raise
    if writer is not None:
        writer.finish(report, spec, status="ok")
    return ExperimentResult(spec, report, mesh, solution, writer.written if writer else [])


def run_sweep(spec: ExperimentSpec, targets: Sequence[int] = DEFAULT_SWEEP_TARGETS) -> List[list]:
    """Final (n_target, nbt, h1, h2, eta) for each target; writes sweep.csv into ``output_dir``."""
    rows = []
    for n in targets:
        run = run_experiment(spec.model_copy(update={"n_target": int(n), "output_dir": None}))
        final = run.report.final
        rows.append([int(n), final.nbt, final.h1_err, final.h2_err, final.eta])
    if spec.output_dir is not None:
        directory = Path(spec.output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "sweep.csv").write_text(emit_sweep_csv(rows))
    return rows


def convergence_slope(rows: Sequence[Sequence[float]]) -> float:
    """Least-squares slope of log(h1_err) against log(nbt) over sweep rows."""
    nbt = np.log([float(r[1]) for r in rows])
    err = np.log([float(r[2]) for r in rows])
    return float(np.polyfit(nbt, err, 1)[0])


def relative_improvement(candidate: float, baseline: float) -> float:
    """(baseline - candidate) / baseline; positive when the candidate is better."""
    if not (baseline > 0.0 and math.isfinite(baseline)):
        return math.nan
    return (baseline - candidate) / baseline


def compare_metrics(
    spec: ExperimentSpec,
    kinds: Sequence[MetricKind] = (MetricKind.NEW_H1, MetricKind.MODIFIED_HESSIAN),
) -> Dict[MetricKind, ExperimentResult]:
    """Run the same experiment once per metric kind; artifacts go to one subdirectory each."""
    results: Dict[MetricKind, ExperimentResult] = {}
    for kind in kinds:
        out = Path(spec.output_dir) / kind.cli_name if spec.output_dir is not None else None
        results[kind] = run_experiment(spec.model_copy(update={"metric": kind, "output_dir": out}))
    return results
