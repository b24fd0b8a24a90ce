"""
Tests for experiment specs, sweeps and on-disk artifacts.
"""

import json
import math

import pytest
from pydantic import ValidationError

from anisomesh.core.experiment import (
    ExperimentSpec,
    compare_metrics,
    convergence_slope,
    relative_improvement,
    run_experiment,
    run_sweep,
)
from anisomesh.core.tensor import MetricKind
from anisomesh.utils.medit import load_mesh, load_sol
from anisomesh.utils.report import REPORT_COLUMNS, SWEEP_COLUMNS, parse_csv

SMALL = dict(example="ex2", alpha=50.0, n_target=120, iterations=2, initial_n=4)


class TestExperimentSpec:
    pytestmark = pytest.mark.unit

    def test_defaults(self):
        spec = ExperimentSpec()
        assert spec.example == "ex2"
        assert spec.parameter_name == "alpha"
        assert spec.parameter == 1000.0
        assert spec.n_target == 4000

    def test_parameter_of_another_example(self):
        with pytest.raises(ValidationError, match="kappa applies to ex1"):
            ExperimentSpec(example="ex2", kappa=0.01)

    def test_unstudied_beta(self):
        with pytest.raises(ValidationError, match="beta must be one of"):
            ExperimentSpec(example="ex3", beta=7.0)

    def test_any_beta(self):
        spec = ExperimentSpec(example="ex3", beta=7.0, allow_any_beta=True)
        assert spec.parameter == 7.0

    def test_beta_below_two(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(example="ex3", beta=1.0, allow_any_beta=True)

    def test_label(self):
        spec = ExperimentSpec(example="ex3", beta=20.0, metric=MetricKind.MODIFIED_HESSIAN, n_target=890)
        assert spec.label() == "ex3(beta=20) mod-hessian N=890"

    def test_adapt_config(self):
        config = ExperimentSpec(**SMALL, metric=MetricKind.NEW_L2, alpha0=0.1).adapt_config()
        assert config.n_target == 120
        assert config.iterations == 2
        assert config.metric is MetricKind.NEW_L2
        assert config.alpha0 == 0.1


class TestStatistics:
    pytestmark = pytest.mark.unit

    def test_convergence_slope(self):
        rows = [[n, n, n ** -0.5, 0.0, 0.0] for n in (250, 500, 1000, 2000)]
        assert convergence_slope(rows) == pytest.approx(-0.5, rel=1e-10)

    def test_relative_improvement(self):
        assert relative_improvement(0.8, 1.0) == pytest.approx(0.2)
        assert relative_improvement(1.5, 1.0) == pytest.approx(-0.5)
        assert math.isnan(relative_improvement(1.0, 0.0))
        assert math.isnan(relative_improvement(1.0, float("nan")))


@pytest.mark.integration
class TestArtifacts:
    def test_run_writes_every_file(self, tmp_path):
        spec = ExperimentSpec(**SMALL, output_dir=tmp_path / "run")
        result = run_experiment(spec)
        out = tmp_path / "run"
        for k in (1, 2):
            for name in (f"mesh_iter_{k}.mesh", f"mesh_iter_{k}.svg", f"metric_iter_{k}.sol", f"solution_iter_{k}.sol"):
                assert (out / name).exists(), name
        assert (out / "report.csv").read_text().splitlines()[0] == ",".join(REPORT_COLUMNS)
        assert len(parse_csv((out / "report.csv").read_text())) == 2
        assert set(result.artifacts) >= {out / "report.csv", out / "summary.json"}

    def test_saved_fields_live_on_saved_mesh(self, tmp_path):
        run_experiment(ExperimentSpec(**SMALL, output_dir=tmp_path))
        mesh = load_mesh(tmp_path / "mesh_iter_2.mesh")
        assert load_sol(tmp_path / "solution_iter_2.sol").shape == (mesh.n_vertices,)
        assert load_sol(tmp_path / "metric_iter_2.sol").shape == (mesh.n_vertices, 3)

    def test_summary(self, tmp_path):
        result = run_experiment(ExperimentSpec(**SMALL, output_dir=tmp_path))
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["status"] == "ok"
        assert summary["parameter"] == {"alpha": 50.0}
        assert summary["final"]["nbt"] == result.report.final.nbt
        assert summary["settings"]["metric"] == "new_h1"

    def test_no_output_dir(self):
        result = run_experiment(ExperimentSpec(**SMALL))
        assert result.artifacts == []
        assert len(result.report) == 2

    def test_sweep(self, tmp_path):
        rows = run_sweep(ExperimentSpec(**SMALL, output_dir=tmp_path), targets=(60, 120))
        assert [r[0] for r in rows] == [60, 120]
        parsed = parse_csv((tmp_path / "sweep.csv").read_text())
        assert list(parsed[0]) == list(SWEEP_COLUMNS)
        assert [int(r["n_target"]) for r in parsed] == [60, 120]

    def test_compare_writes_one_directory_per_metric(self, tmp_path):
        spec = ExperimentSpec(**SMALL, output_dir=tmp_path)
        results = compare_metrics(spec)
        assert set(results) == {MetricKind.NEW_H1, MetricKind.MODIFIED_HESSIAN}
        assert (tmp_path / "new-h1" / "report.csv").exists()
        assert (tmp_path / "mod-hessian" / "report.csv").exists()
        assert results[MetricKind.MODIFIED_HESSIAN].report.metric == "modified_hessian"
