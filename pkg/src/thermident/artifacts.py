"""CSV artifacts: evaluation reports, traces and fitted-parameter files.

Every file starts with ``# key: value`` provenance lines (config hash and
seeds) so a later command can check it was produced by the same scenario.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .dataset import fmt, read_comment_header, write_comment_header
from .evaluation import SIM_TYPES, TRACE_COLUMNS, EvalReport
from .exceptions import ConfigurationError

REPORT_COLUMNS = (
    "method", "architecture", "sim_type", "training_days", "average_accuracy", "deadband_occupancy",
)
_METHOD_ORDER = {m: i for i, m in enumerate(("NLS", "BE", "MLE", "ALS"))}


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return fmt(float(value))
    return str(value)


def _write_csv(path, header: dict, columns, rows) -> None:
    buf = io.StringIO()
    write_comment_header(buf, header)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def report_sort_key(report: EvalReport):
    return (
        _METHOD_ORDER.get(report.method, len(_METHOD_ORDER)),
        report.method,
        report.architecture,
        SIM_TYPES.index(report.sim_type),
        -1 if report.training_days is None else report.training_days,
    )


def write_report(reports, path, header: dict | None = None) -> None:
    """Report CSV ordered by (method, architecture, sim type, window)."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to write")
    rows = [
        (r.method, r.architecture, r.sim_type, r.training_days, r.average_accuracy, r.deadband_occupancy)
        for r in sorted(reports, key=report_sort_key)
    ]
    _write_csv(path, header or {}, REPORT_COLUMNS, rows)


def read_report(path) -> tuple[list[EvalReport], dict]:
    lines = Path(path).read_text().splitlines()
    meta, n = read_comment_header(lines)
    rows = list(csv.DictReader(lines[n:]))
    out = []
    for row in rows:
        out.append(
            EvalReport(
                method=row["method"],
                architecture=row["architecture"],
                sim_type=row["sim_type"],
                training_days=int(row["training_days"]) if row["training_days"] else None,
                average_accuracy=float(row["average_accuracy"]) if row["average_accuracy"] else None,
                deadband_occupancy=float(row["deadband_occupancy"]) if row["deadband_occupancy"] else None,
            )
        )
    return out, meta


def write_trace(columns: dict, path, header: dict | None = None) -> None:
    missing = [c for c in TRACE_COLUMNS if c not in columns]
    if missing:
        raise ValueError(f"trace lacks columns {missing}")
    _write_csv(path, header or {}, TRACE_COLUMNS, zip(*(columns[c] for c in TRACE_COLUMNS)))


def write_parameters(values: dict, path, header: dict | None = None) -> None:
    """Two-column ``name,value`` file; insertion order is preserved."""
    _write_csv(path, header or {}, ("name", "value"), values.items())


def read_parameters(path) -> tuple[dict, dict]:
    lines = Path(path).read_text().splitlines()
    meta, n = read_comment_header(lines)
    values = {}
    for row in list(csv.reader(lines[n:]))[1:]:
        if row:
            values[row[0]] = float(row[1])
    return values, meta


def read_header(path) -> dict:
    with open(path) as fh:
        return read_comment_header(fh)[0]


def check_provenance(path, config_hash: str) -> dict:
    """Header of ``path``, which must carry ``config_hash``."""
    try:
        meta = read_header(path)
    except OSError:
        raise ConfigurationError(f"missing artifact {path}; run the earlier pipeline stage first") from None
    found = meta.get("config_hash")
    if found != config_hash:
        raise ConfigurationError(
            f"{path} was produced with config hash {found}, current config is {config_hash}"
        )
    return meta
