"""
Tests for CSV / JSON reports and SVG rendering.
"""

import json
import math

import numpy as np
import pytest

from anisomesh.core.adaptive import AdaptReport, IterationRecord
from anisomesh.core.exceptions import FieldError
from anisomesh.core.mesh import NodalScalarField
from anisomesh.core.tensor import EdgeLengthSummary
from anisomesh.ui.svg import UNIFORM_FILL, render_svg, triangle_colors
from anisomesh.utils.report import (
    emit_csv,
    emit_sweep_csv,
    format_value,
    parse_csv,
    summary_dict,
    write_summary,
)

pytestmark = pytest.mark.unit


def record(k, h2=0.25):
    return IterationRecord(
        iteration=k,
        nbt=100 * k,
        nv=60 * k,
        h1_err=1.0 / (3.0 * k),
        h2_err=h2,
        eta=0.1 / k,
        cv_eta=0.5,
        delta_u=0.01,
        coefficient=math.sqrt(3.0) / 4.0,
        edge_lengths=EdgeLengthSummary(count=10, minimum=0.5, maximum=1.5, mean=1.0, in_band=0.9),
    )


@pytest.fixture
def report():
    return AdaptReport(problem="ex2(alpha=1000)", metric="new_h1", n_target=100,
                       records=[record(1), record(2), record(3)])


class TestCsv:
    def test_header_and_rows(self, report):
        lines = emit_csv(report).splitlines()
        assert lines[0] == "iter,nbt,nv,h1_err,h2_err,eta,cv_eta"
        assert len(lines) == 4
        assert lines[1].startswith("1,100,60,")

    def test_floats_roundtrip_exactly(self, report):
        rows = parse_csv(emit_csv(report))
        assert [r["h1_err"] for r in rows] == [1.0 / 3.0, 1.0 / 6.0, 1.0 / 9.0]
        assert [int(r["nbt"]) for r in rows] == [100, 200, 300]

    def test_format_value(self):
        assert format_value(7) == "7"
        assert format_value(True) == "1"
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(float("nan")) == "nan"

    def test_empty_report(self):
        assert emit_csv(AdaptReport()) == "iter,nbt,nv,h1_err,h2_err,eta,cv_eta\n"

    def test_sweep(self):
        text = emit_sweep_csv([[250, 247, 0.5, 2.0, 0.4], [500, 512, 0.35, 1.4, 0.3]])
        lines = text.splitlines()
        assert lines[0] == "n_target,nbt,h1_err,h2_err,eta"
        assert lines[2] == "500,512,0.34999999999999998,1.3999999999999999,0.29999999999999999"


class TestSummary:
    def test_final_row(self, report):
        data = summary_dict(report, status="ok")
        assert data["final"]["iteration"] == 3
        assert data["status"] == "ok"
        assert len(data["iterations"]) == 3

    def test_nan_becomes_null(self):
        data = summary_dict(AdaptReport(records=[record(1, h2=float("nan"))]))
        assert data["final"]["h2_err"] is None
        assert data["iterations"][0]["h2_err"] is None

    def test_empty(self):
        assert summary_dict(AdaptReport())["final"] is None

    def test_written_file_is_strict_json(self, report, tmp_path):
        report.records.append(record(4, h2=float("inf")))
        path = tmp_path / "summary.json"
        write_summary(report, path, example="ex2")
        data = json.loads(path.read_text(), parse_constant=lambda name: pytest.fail(f"non-standard {name}"))
        assert data["example"] == "ex2"
        assert data["final"]["h2_err"] is None


class TestSvg:
    def test_one_polygon_per_triangle(self, square4):
        svg = render_svg(square4)
        assert svg.count("<polygon") == square4.n_triangles
        assert svg.startswith('<?xml version="1.0"')
        assert svg.rstrip().endswith("</svg>")

    def test_deterministic(self, square8):
        field = NodalScalarField.from_function(square8, lambda x, y: x * y)
        assert render_svg(square8, field) == render_svg(square8, field)

    def test_uniform_fill_without_field(self, square4):
        assert triangle_colors(square4) == [UNIFORM_FILL] * square4.n_triangles
        assert triangle_colors(square4, np.full(square4.n_vertices, 2.0)) == [UNIFORM_FILL] * square4.n_triangles

    def test_field_colors(self, square4):
        colors = triangle_colors(square4, square4.vertices[:, 0])
        assert len(set(colors)) > 1
        assert all(c.startswith("#") and len(c) == 7 for c in colors)

    def test_field_size_mismatch(self, square4):
        with pytest.raises(FieldError):
            render_svg(square4, np.zeros(3))

    def test_y_axis_points_up(self, two_triangle_square):
        svg = render_svg(two_triangle_square, size=100.0)
        # Vertex (0, 0) is drawn at the bottom-left corner of the canvas
        assert "10.000,90.000" in svg
        assert "90.000,10.000" in svg
