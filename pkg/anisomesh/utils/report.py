"""
Report - CSV and JSON output of adaptive runs.
"""

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

from ..core.adaptive import AdaptReport, IterationRecord

REPORT_COLUMNS = ("iter", "nbt", "nv", "h1_err", "h2_err", "eta", "cv_eta")
SWEEP_COLUMNS = ("n_target", "nbt", "h1_err", "h2_err", "eta")


def format_value(value: Any) -> str:
    """Integers verbatim, floats with 17 significant digits."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def record_row(record: IterationRecord) -> List[Any]:
    return [record.iteration, record.nbt, record.nv, record.h1_err, record.h2_err, record.eta, record.cv_eta]


def emit_csv(report: AdaptReport) -> str:
    """One row per iteration under the fixed report header."""
    return _table(REPORT_COLUMNS, (record_row(r) for r in report.records))


def emit_sweep_csv(rows: Iterable[Sequence[Any]]) -> str:
    """Rows of (n_target, nbt, h1_err, h2_err, eta)."""
    return _table(SWEEP_COLUMNS, rows)


def parse_csv(text: str) -> List[Dict[str, float]]:
    """Read a report or sweep CSV back into dictionaries of floats."""
    reader = csv.DictReader(io.StringIO(text))
    return [{k: float(v) for k, v in row.items()} for row in reader]


def _finite_or_none(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite_or_none(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite_or_none(v) for v in value]
    return value


def summary_dict(report: AdaptReport, **extra: Any) -> Dict[str, Any]:
    """JSON-ready run summary: settings, final row and every iteration."""
    data = report.to_dict()
    final = report.final
    data["final"] = final.to_dict() if final is not None else None
    data.update(extra)
    return _finite_or_none(data)


def write_summary(report: AdaptReport, path: Union[str, Path], **extra: Any) -> None:
    Path(path).write_text(json.dumps(summary_dict(report, **extra), indent=2, sort_keys=True) + "\n")
