"""
Anisomesh - Main CLI Application

This module provides the command line interface and application orchestration
for the anisotropic mesh adaptation experiments.
"""

import functools
import math
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console

from .config.manager import ConfigManager
from .core.error_metrics import formula_check
from .core.exceptions import (
    AdaptationError,
    AnisomeshError,
    FieldError,
    MeditError,
    MeshValidationError,
    ProblemError,
    SolverBreakdownError,
    TensorError,
)
from .core.experiment import (
    DEFAULT_SWEEP_TARGETS,
    ExperimentResult,
    ExperimentSpec,
    compare_metrics,
    convergence_slope,
    relative_improvement,
    run_experiment,
    run_sweep,
)
from .core.tensor import MetricKind, det_entries
from .ui.svg import render_svg
from .ui.terminal import TerminalUI
from .utils.history import HistoryManager
from .utils.logger import get_logger, setup_logger
from .utils.medit import load_mesh, load_sol

logger = get_logger(__name__)

EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
FORMULA_TOLERANCE = 1e-9

METRIC_CHOICES = [kind.cli_name for kind in MetricKind]
VALIDATION_ERRORS = (
    ValidationError,
    MeshValidationError,
    FieldError,
    MeditError,
    ProblemError,
    TensorError,
)


class Anisomesh:
    """Main application class."""

    def __init__(self, verbose: bool = False, console: Optional[Console] = None) -> None:
        self.console = console or Console()
        self.config_manager = ConfigManager()
        self.settings = self.config_manager.settings
        self.logger = setup_logger(level=self.settings.log_level, verbose=verbose)
        self.history_manager = HistoryManager()
        self.ui = TerminalUI(self.console)

    def build_spec(
        self,
        example: str,
        metric: Optional[str] = None,
        n_target: Optional[int] = None,
        iterations: Optional[int] = None,
        output_dir: Optional[Path] = None,
        **overrides: Any,
    ) -> ExperimentSpec:
        """ExperimentSpec from command options, falling back to the configured defaults."""
        s = self.settings
        values = dict(
            example=example,
            metric=MetricKind.from_cli(metric) if metric else s.metric,
            n_target=n_target if n_target is not None else s.n_target,
            iterations=iterations if iterations is not None else s.iterations,
            initial_n=s.initial_n,
            split_threshold=s.split_threshold,
            collapse_threshold=s.collapse_threshold,
            max_local_passes=s.max_local_passes,
            smoothing_passes=s.smoothing_passes,
            output_dir=output_dir,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentSpec(**values)

    def run(self, spec: ExperimentSpec) -> ExperimentResult:
        """Run one experiment with a progress bar and record it in the history."""
        self.ui.show_banner("anisomesh run", spec.label())
        with self.ui.iteration_progress(spec.iterations, spec.label()) as advance:
            try:
                result = run_experiment(spec, on_iteration=lambda k, mesh, u, metric, record: advance(record))
            except AdaptationError as e:
                self._record("run", spec, e.report.final.to_dict() if e.report and e.report.final else None,
                             status="failed")
                if e.report is not None and len(e.report):
                    self.ui.show_report(e.report, title="Partial report")
                raise
        self.ui.show_report(result.report)
        self._record("run", spec, result.report.final.to_dict())
        if spec.output_dir is not None:
            self.ui.show_success(f"Artifacts written to {spec.output_dir}")
        return result

    def sweep(self, spec: ExperimentSpec, targets: List[int]) -> List[list]:
        with self.console.status(f"Sweeping {spec.example} over N = {', '.join(map(str, targets))}"):
            rows = run_sweep(spec, targets)
        slope = None
        if len(rows) >= 2 and all(r[1] > 0 and r[2] > 0 and math.isfinite(r[2]) for r in rows):
            slope = convergence_slope(rows)
        self.ui.show_sweep(rows, slope)
        self._record("sweep", spec, {"nbt": rows[-1][1], "h1_err": rows[-1][2], "h2_err": rows[-1][3]})
        return rows

    def compare(self, spec: ExperimentSpec, candidate: MetricKind, baseline: MetricKind) -> float:
        """Run both metrics at the same target; returns the relative H1 improvement."""
        with self.console.status(f"Comparing {candidate.cli_name} with {baseline.cli_name}"):
            results = compare_metrics(spec, (candidate, baseline))
        new = results[candidate].report.final
        base = results[baseline].report.final
        improvement = relative_improvement(new.h1_err, base.h1_err)
        self.ui.show_comparison({candidate.cli_name: new, baseline.cli_name: base}, improvement)
        for result in results.values():
            self._record("compare", result.spec, result.report.final.to_dict())
        return improvement

    def _record(self, command: str, spec: ExperimentSpec, final: Optional[dict], status: str = "ok") -> None:
        self.history_manager.add_entry(
            command=command,
            example=spec.example,
            metric=spec.metric.cli_name,
            n_target=spec.n_target,
            final=final,
            output_dir=str(spec.output_dir) if spec.output_dir is not None else None,
            status=status,
        )


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Map failures to exit codes: 2 for invalid input, 3 for solver and adaptation failures."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        ui = TerminalUI(Console(stderr=True))
        try:
            return func(*args, **kwargs)
        except (AdaptationError, SolverBreakdownError) as e:
            logger.error(f"{func.__name__}: {e}")
            ui.show_error(str(e))
            sys.exit(EXIT_SOLVER)
        except VALIDATION_ERRORS as e:
            logger.error(f"{func.__name__}: invalid input: {e}")
            ui.show_error(str(e))
            sys.exit(EXIT_VALIDATION)
        except (AnisomeshError, OSError) as e:
            logger.error(f"{func.__name__}: {e}")
            ui.show_error(str(e))
            sys.exit(EXIT_FAILURE)

    return wrapper


def _app(ctx: click.Context) -> Anisomesh:
    obj = ctx.find_root().obj or {}
    return Anisomesh(verbose=obj.get("verbose", False))


def _parse_targets(ctx: click.Context, param: click.Parameter, value: str) -> List[int]:
    try:
        targets = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of integers")
    if not targets or any(t < 1 for t in targets):
        raise click.BadParameter("targets must be positive integers")
    return targets


def problem_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every command that runs the adaptive loop."""
    options = [
        click.option("--example", type=click.Choice(["ex1", "ex2", "ex3"]), default="ex2", show_default=True,
                     help="Benchmark problem"),
        click.option("--metric", type=click.Choice(METRIC_CHOICES), default=None,
                     help="Metric construction (default from config)"),
        click.option("--iters", "iterations", type=int, default=None, help="Adaptive iterations"),
        click.option("--kappa", type=float, default=None, help="ex1 diffusion (default 0.0015)"),
        click.option("--alpha", type=float, default=None, help="ex2 layer strength (default 1000)"),
        click.option("--beta", type=float, default=None, help="ex3 exponent (5, 10, 20 or 40; default 40)"),
        click.option("--any-beta", "allow_any_beta", is_flag=True, help="Allow beta outside the studied values"),
        click.option("--alpha0", type=float, default=None, help="L2 flooring parameter"),
        click.option("--alpha1", type=float, default=None, help="H1 flooring parameter"),
        click.option("--initial-n", type=int, default=None, help="Cells per side of the initial mesh"),
        click.option("--validate-sweeps", "validate_every_sweep", is_flag=True,
                     help="Validate the mesh after every remesher sweep"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group(invoke_without_command=True)
@click.option("--verbose", "-v", is_flag=True, help="Log to the console")
@click.option("--version", is_flag=True, help="Show version information")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, version: bool) -> None:
    """Anisomesh - Anisotropic mesh adaptation with metric tensors

    Solve the benchmark problems on adapted meshes and compare metrics.

    Examples:
        anisomesh run --example ex2 --metric new-h1 --nbt 4000 --out runs/ex2
        anisomesh compare --example ex3 --beta 40 --nbt 890
        anisomesh formulas --check 1000
    """
    if version:
        from . import __version__
        click.echo(f"anisomesh version {__version__}")
        ctx.exit()

    ctx.obj = {"verbose": verbose}
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@cli.command()
@problem_options
@click.option("--nbt", "n_target", type=int, default=None, help="Target element count")
@click.option("--out", "output_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory (default runs/<example>-<metric>-n<N>)")
@click.pass_context
@handle_errors
def run(ctx: click.Context, example: str, metric: Optional[str], n_target: Optional[int],
        output_dir: Optional[Path], **overrides: Any) -> None:
    """Run the adaptive loop and write report.csv, meshes, pictures and fields."""
    app = _app(ctx)
    spec = app.build_spec(example, metric, n_target, output_dir=output_dir, **overrides)
    if spec.output_dir is None:
        default = Path("runs") / f"{spec.example}-{spec.metric.cli_name}-n{spec.n_target}"
        spec = spec.model_copy(update={"output_dir": default})
    app.run(spec)


@cli.command()
@problem_options
@click.option("--targets", callback=_parse_targets, default=",".join(map(str, DEFAULT_SWEEP_TARGETS)),
              show_default=True, help="Comma-separated target element counts")
@click.option("--out", "output_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for sweep.csv (default runs/sweep-<example>-<metric>)")
@click.pass_context
@handle_errors
def sweep(ctx: click.Context, example: str, metric: Optional[str], targets: List[int],
          output_dir: Optional[Path], **overrides: Any) -> None:
    """Final errors for a sequence of target element counts."""
    app = _app(ctx)
    spec = app.build_spec(example, metric, targets[0], output_dir=output_dir, **overrides)
    if spec.output_dir is None:
        spec = spec.model_copy(update={"output_dir": Path("runs") / f"sweep-{spec.example}-{spec.metric.cli_name}"})
    app.sweep(spec, targets)
    app.ui.show_success(f"Wrote {spec.output_dir / 'sweep.csv'}")


@cli.command()
@problem_options
@click.option("--nbt", "n_target", type=int, default=None, help="Target element count for both runs")
@click.option("--baseline", type=click.Choice(METRIC_CHOICES), default=MetricKind.MODIFIED_HESSIAN.cli_name,
              show_default=True, help="Metric to compare against")
@click.option("--out", "output_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Write each run's artifacts into a subdirectory of this directory")
@click.pass_context
@handle_errors
def compare(ctx: click.Context, example: str, metric: Optional[str], n_target: Optional[int], baseline: str,
            output_dir: Optional[Path], **overrides: Any) -> None:
    """Run a metric and a baseline at the same target and report the H1 improvement."""
    app = _app(ctx)
    spec = app.build_spec(example, metric or MetricKind.NEW_H1.cli_name, n_target, output_dir=output_dir,
                          **overrides)
    app.compare(spec, spec.metric, MetricKind.from_cli(baseline))


@cli.command()
@click.option("--check", "trials", type=click.IntRange(min=1), default=1000, show_default=True,
              help="Number of random (H, triangle) trials")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-aspect", type=click.FloatRange(min=1.0), default=1e3, show_default=True,
              help="Largest triangle stretching")
@click.pass_context
@handle_errors
def formulas(ctx: click.Context, trials: int, seed: int, max_aspect: float) -> None:
    """Check the closed-form interpolation errors against quadrature."""
    app = _app(ctx)
    check = formula_check(trials, seed=seed, max_aspect=max_aspect)
    app.ui.show_formula_check(check, FORMULA_TOLERANCE)
    worst = max(check.h1_edges, check.h1_bank_smith, check.l2_nadler)
    app.ui.show_info(f"max relative deviation {worst:.3e}")
    if worst > FORMULA_TOLERANCE:
        sys.exit(EXIT_FAILURE)


@cli.command()
@click.argument("mesh_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("sol_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=False)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="SVG file to write")
@click.pass_context
@handle_errors
def render(ctx: click.Context, mesh_file: Path, sol_file: Optional[Path], output: Path) -> None:
    """Render a MEDIT mesh, optionally coloured by a scalar or metric .sol field."""
    app = _app(ctx)
    mesh = load_mesh(mesh_file)
    field = None
    if sol_file is not None:
        values = load_sol(sol_file)
        if values.ndim == 2:
            # Metric fields are shown by their density sqrt(det M)
            values = np.sqrt(np.maximum(det_entries(values), 0.0))
        field = values
    output.write_text(render_svg(mesh, field))
    app.ui.show_success(f"Wrote {output} ({mesh.n_triangles} triangles)")


@cli.group()
def config() -> None:
    """Configuration management commands."""
    pass


@config.command("show")
@click.pass_context
@handle_errors
def config_show(ctx: click.Context) -> None:
    """Show the effective configuration."""
    app = _app(ctx)
    app.ui.show_config(app.config_manager.show_config(), str(app.config_manager.config_file))


@config.command("set")
@click.option("--n-target", type=int)
@click.option("--iterations", type=int)
@click.option("--metric", type=click.Choice(METRIC_CHOICES))
@click.option("--initial-n", type=int)
@click.option("--split-threshold", type=float)
@click.option("--collapse-threshold", type=float)
@click.option("--max-local-passes", type=int)
@click.option("--smoothing-passes", type=int)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.pass_context
@handle_errors
def config_set(ctx: click.Context, metric: Optional[str], log_level: Optional[str], **values: Any) -> None:
    """Set configuration options."""
    app = _app(ctx)
    if metric is not None:
        values["metric"] = MetricKind.from_cli(metric)
    if log_level is not None:
        values["log_level"] = log_level.upper()
    changed = {k: v for k, v in values.items() if v is not None}
    if not changed:
        app.ui.show_warning("Nothing to set")
        return
    app.config_manager.set(**changed)
    for key, value in changed.items():
        click.echo(f"{key} set to: {value.cli_name if isinstance(value, MetricKind) else value}")


@config.command("reset")
@click.pass_context
@handle_errors
def config_reset(ctx: click.Context) -> None:
    """Restore the default configuration."""
    app = _app(ctx)
    app.config_manager.reset()
    app.ui.show_success("Configuration reset to defaults")


@cli.command()
@click.option("--limit", type=int, default=20, show_default=True)
@click.option("--search", default=None, help="Filter by command, example or metric")
@click.pass_context
@handle_errors
def history(ctx: click.Context, limit: int, search: Optional[str]) -> None:
    """Show recorded runs."""
    app = _app(ctx)
    entries = app.history_manager.search(search) if search else app.history_manager.history
    app.ui.show_history(entries[-limit:] if limit > 0 else [])


@cli.command()
@click.pass_context
@handle_errors
def doctor(ctx: click.Context) -> None:
    """Run system diagnostics."""
    app = _app(ctx)
    app.ui.show_diagnostics(app.config_manager.run_diagnostics())


def main() -> None:
    """Main entry point for the CLI."""
    try:
        cli()
    except KeyboardInterrupt:
        click.echo("\nInterrupted")
        sys.exit(130)
    except Exception as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    main()
