"""
Tests for the command line interface.
"""

import numpy as np
import pytest
from click.testing import CliRunner

from anisomesh import __version__
from anisomesh.core import adaptive
from anisomesh.core.exceptions import SolverBreakdownError
from anisomesh.main import EXIT_SOLVER, EXIT_VALIDATION, cli
from anisomesh.utils.history import HistoryManager
from anisomesh.utils.medit import save_mesh, save_sol
from anisomesh.utils.report import parse_csv

SMALL_RUN = ["--example", "ex2", "--alpha", "50", "--iters", "1", "--initial-n", "4"]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.mark.unit
class TestBasics:
    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert f"anisomesh version {__version__}" in result.output

    def test_help_without_command(self, runner):
        result = runner.invoke(cli, [])
        assert result.exit_code == 0
        assert "Anisotropic mesh adaptation" in result.output

    def test_formulas(self, runner):
        result = runner.invoke(cli, ["formulas", "--check", "20", "--max-aspect", "10"])
        assert result.exit_code == 0, result.output
        assert "max relative deviation" in result.output

    def test_doctor(self, runner):
        result = runner.invoke(cli, ["doctor"])
        assert result.exit_code == 0
        assert "numpy" in result.output

    def test_empty_history(self, runner):
        result = runner.invoke(cli, ["history"])
        assert result.exit_code == 0
        assert "No history entries found" in result.output


@pytest.mark.unit
class TestRender:
    def test_plain_mesh(self, runner, tmp_path, square4):
        save_mesh(square4, tmp_path / "a.mesh")
        result = runner.invoke(cli, ["render", str(tmp_path / "a.mesh"), "-o", str(tmp_path / "a.svg")])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "a.svg").read_text().count("<polygon") == square4.n_triangles

    def test_scalar_and_metric_fields(self, runner, tmp_path, square4):
        save_mesh(square4, tmp_path / "a.mesh")
        save_sol(square4.vertices[:, 0], tmp_path / "u.sol")
        save_sol(np.tile([4.0, 0.0, 1.0], (square4.n_vertices, 1)), tmp_path / "m.sol")
        for sol in ("u.sol", "m.sol"):
            result = runner.invoke(
                cli, ["render", str(tmp_path / "a.mesh"), str(tmp_path / sol), "-o", str(tmp_path / "a.svg")]
            )
            assert result.exit_code == 0, result.output

    def test_field_of_wrong_size(self, runner, tmp_path, square4):
        save_mesh(square4, tmp_path / "a.mesh")
        save_sol(np.zeros(3), tmp_path / "u.sol")
        result = runner.invoke(
            cli, ["render", str(tmp_path / "a.mesh"), str(tmp_path / "u.sol"), "-o", str(tmp_path / "a.svg")]
        )
        assert result.exit_code == EXIT_VALIDATION

    def test_unsupported_dimension(self, runner, tmp_path):
        (tmp_path / "bad.mesh").write_text("MeshVersionFormatted 2\nDimension 3\n")
        result = runner.invoke(cli, ["render", str(tmp_path / "bad.mesh"), "-o", str(tmp_path / "a.svg")])
        assert result.exit_code == EXIT_VALIDATION


@pytest.mark.unit
class TestConfig:
    def test_set_and_show(self, runner):
        result = runner.invoke(cli, ["config", "set", "--n-target", "890", "--metric", "mod-hessian"])
        assert result.exit_code == 0, result.output
        assert "n_target set to: 890" in result.output
        assert "metric set to: mod-hessian" in result.output
        shown = runner.invoke(cli, ["config", "show"])
        assert shown.exit_code == 0
        assert "890" in shown.output
        assert "modified_hessian" in shown.output

    def test_nothing_to_set(self, runner):
        result = runner.invoke(cli, ["config", "set"])
        assert result.exit_code == 0
        assert "Nothing to set" in result.output

    @pytest.mark.parametrize("args", [["--iterations", "0"], ["--split-threshold", "0.9"]])
    def test_invalid_value(self, runner, args):
        assert runner.invoke(cli, ["config", "set", *args]).exit_code == EXIT_VALIDATION

    def test_reset(self, runner):
        runner.invoke(cli, ["config", "set", "--n-target", "890"])
        assert runner.invoke(cli, ["config", "reset"]).exit_code == 0
        assert "4000" in runner.invoke(cli, ["config", "show"]).output


@pytest.mark.unit
class TestValidation:
    def test_unstudied_beta(self, runner):
        result = runner.invoke(cli, ["run", "--example", "ex3", "--beta", "7"])
        assert result.exit_code == EXIT_VALIDATION

    def test_parameter_of_another_example(self, runner):
        result = runner.invoke(cli, ["run", "--example", "ex2", "--kappa", "0.1"])
        assert result.exit_code == EXIT_VALIDATION

    def test_bad_targets(self, runner):
        result = runner.invoke(cli, ["sweep", "--targets", "a,b"])
        assert result.exit_code == 2

    def test_unknown_metric(self, runner):
        result = runner.invoke(cli, ["run", "--metric", "euclid"])
        assert result.exit_code == 2


@pytest.mark.slow
class TestRuns:
    def test_run(self, runner, tmp_path, isolated_home):
        out = tmp_path / "run"
        result = runner.invoke(cli, ["run", *SMALL_RUN, "--nbt", "100", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert len(parse_csv((out / "report.csv").read_text())) == 1
        assert (out / "mesh_iter_1.svg").exists()
        entries = HistoryManager(isolated_home).history
        assert len(entries) == 1
        assert entries[0]["command"] == "run"
        assert entries[0]["status"] == "ok"

    def test_solver_failure_exit_code(self, runner, tmp_path, monkeypatch):
        def broken(problem, mesh):
            raise SolverBreakdownError(1.0)

        monkeypatch.setattr(adaptive, "fem_solve", broken)
        result = runner.invoke(cli, ["run", *SMALL_RUN, "--nbt", "100", "--out", str(tmp_path / "run")])
        assert result.exit_code == EXIT_SOLVER

    def test_sweep(self, runner, tmp_path):
        out = tmp_path / "sweep"
        result = runner.invoke(cli, ["sweep", *SMALL_RUN, "--targets", "60,120", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert len(parse_csv((out / "sweep.csv").read_text())) == 2

    def test_compare(self, runner, tmp_path):
        result = runner.invoke(cli, ["compare", *SMALL_RUN, "--nbt", "100", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "new-h1" / "report.csv").exists()
        assert (tmp_path / "mod-hessian" / "report.csv").exists()
