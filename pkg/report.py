"""
Report Module

Serialization of pipeline outputs:
- Transcript and refined-record CSV writers (the format ingest reads back)
- csv / json / aligned-table renderings of every report type
- Run manifests written next to each output file
"""

import json
from dataclasses import asdict, dataclass, field
from functools import singledispatch
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from classify import REFERENCE_SCORES, ClassifierComparison, MaiEffectReport, Metrics
from cleanse import CleanseReport
from ingest import OPTIONAL_COLUMNS, REFINED_COLUMNS, TRANSCRIPT_COLUMNS, IngestReport
from observability import utc_now, current_run_id
from refine import RefinementSummary
from stats import CorrelationMatrix, GroupMeansTable, ModelComparison, QuadFit, TTestResult
from synthgen import SynthReport
from transcript_model import RefinedRecord, TranscriptRecord

FORMATS = ("csv", "json", "table")
MANIFEST_SUFFIX = ".manifest.json"


def _text(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _record_frame(records: Sequence[TranscriptRecord], refined: bool) -> pd.DataFrame:
    columns = TRANSCRIPT_COLUMNS + OPTIONAL_COLUMNS + (REFINED_COLUMNS if refined else ())
    rows = [[_text(getattr(r, name)) for name in columns] for r in records]
    return pd.DataFrame(rows, columns=list(columns), dtype=str)


def _write_frame(frame: pd.DataFrame, target: Union[str, Path, TextIO]):
    if isinstance(target, (str, Path)):
        Path(target).write_text(frame.to_csv(index=False, lineterminator="\n"), encoding="utf-8")
    else:
        target.write(frame.to_csv(index=False, lineterminator="\n"))


def write_transcripts(records: Sequence[TranscriptRecord], target: Union[str, Path, TextIO]):
    """Write records in the ingest column format (blank cells for missing values)"""
    _write_frame(_record_frame(records, refined=False), target)


def write_refined(records: Sequence[RefinedRecord], target: Union[str, Path, TextIO]):
    """Write refined records: transcript columns plus mai, rmm, flag"""
    _write_frame(_record_frame(records, refined=True), target)


@dataclass
class RunManifest:
    """Provenance of one CLI invocation"""

    subcommand: str
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    seed: Optional[int] = None
    coefficients: Optional[Dict[str, float]] = None
    class_table_source: str = "builtin"
    started_at: str = field(default_factory=utc_now)
    finished_at: Optional[str] = None
    counts: Dict[str, Dict[str, int]] = field(default_factory=dict)
    run_id: Optional[str] = field(default_factory=current_run_id)

    def finish(self, counts: Dict[str, Dict[str, int]]):
        self.finished_at = utc_now()
        self.counts = counts


def manifest_path(output: Union[str, Path]) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


def write_manifest(manifest: RunManifest, output: Union[str, Path]) -> Path:
    """Write the manifest as ``<output>.manifest.json`` and return its path"""
    path = manifest_path(output)
    path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    return path


# Each view is (title, JSON-ready payload, tabular frame)
View = Tuple[str, Dict[str, Any], pd.DataFrame]


def _round(value: Optional[float], digits: int = 4) -> Optional[float]:
    return None if value is None else round(float(value), digits)


@singledispatch
def view(report) -> View:
    raise TypeError(f"no rendering for {type(report).__name__}")


@view.register
def _(report: IngestReport) -> View:
    payload = {
        "rows_read": report.rows_read,
        "rows_accepted": report.rows_accepted,
        "rows_rejected": report.rows_rejected,
        "rejects": [{"line": line, "reason": reason} for line, reason in report.rejects],
        "ignored_columns": list(report.ignored_columns),
    }
    frame = pd.DataFrame(payload["rejects"], columns=["line", "reason"])
    return "Ingest rejects", payload, frame


@view.register
def _(report: CleanseReport) -> View:
    payload = {
        "input_size": report.input_size,
        "methods_inferred": report.methods_inferred,
        "records_dropped": report.records_dropped,
        "dropped_fraction": _round(report.dropped_fraction, 6),
        "dropped_percent": _round(report.dropped_percent, 4),
        "unresolved": report.unresolved,
        "label_conflicts": report.label_conflicts,
        "unresolved_keys": [list(k) for k in report.unresolved_keys],
    }
    scalars = {k: v for k, v in payload.items() if k != "unresolved_keys"}
    frame = pd.DataFrame({"metric": list(scalars), "value": list(scalars.values())})
    return "Cleansing", payload, frame


@view.register
def _(report: SynthReport) -> View:
    payload = asdict(report)
    payload["clamped_fraction"] = _round(report.clamped_fraction, 6)
    frame = pd.DataFrame({"metric": list(payload), "value": list(payload.values())})
    return "Synthetic transcripts", payload, frame


@view.register
def _(table: GroupMeansTable) -> View:
    rows = [
        {
            "department": row.department.value,
            "students": row.student_count,
            "exam": _round(row.exam, 2),
            "coursework": _round(row.coursework, 2),
            "both": _round(row.both, 2),
        }
        for row in table.rows
    ]
    return "Average module marks", {"rows": rows}, pd.DataFrame(rows)


@view.register
def _(results: dict) -> View:
    # Named t-test results
    rows = []
    for name, result in results.items():
        if not isinstance(result, TTestResult):
            raise TypeError(f"no rendering for a dict of {type(result).__name__}")
        rows.append(
            {
                "comparison": name,
                "t": _round(result.t, 4),
                "p": _round(result.p, 4),
                "df": result.df,
                "mean_diff": _round(result.mean_diff, 4),
            }
        )
    return "Paired t-tests", {"tests": rows}, pd.DataFrame(
        rows, columns=["comparison", "t", "p", "df", "mean_diff"]
    )


@view.register
def _(matrix: CorrelationMatrix) -> View:
    cells = [[_round(v, 4) for v in row] for row in matrix.cells]
    grid = [
        [cells[i][j] if j <= i else None for j in range(len(matrix.factors))]
        for i in range(len(matrix.factors))
    ]
    frame = pd.DataFrame(grid, columns=list(matrix.factors))
    frame.insert(0, "factor", list(matrix.factors))
    return "Correlation matrix", {"factors": list(matrix.factors), "cells": cells}, frame


def _fit_row(fit: QuadFit) -> Dict[str, Any]:
    return {
        "degree": fit.degree,
        "beta0": _round(fit.beta0, 6),
        "beta1": _round(fit.beta1, 6),
        "beta2": _round(fit.beta2, 6),
        "r_squared": _round(fit.r_squared, 6),
    }


@view.register
def _(fit: QuadFit) -> View:
    row = _fit_row(fit)
    return "Regression fit", row, pd.DataFrame([row])


@view.register
def _(comparison: ModelComparison) -> View:
    rows = [_fit_row(comparison.linear), _fit_row(comparison.quadratic)]
    payload = {
        "fits": rows,
        "preferred_degree": comparison.preferred_degree,
        "r_squared_gain": _round(comparison.r_squared_gain, 6),
    }
    return "Linear vs quadratic", payload, pd.DataFrame(rows)


@view.register
def _(summary: RefinementSummary) -> View:
    rows = [
        {
            "group": row.label,
            "modules": row.module_count,
            "mean_mm": _round(row.mean_mm, 2),
            "mean_rmm": _round(row.mean_rmm, 2),
            "mean_delta": _round(row.mean_delta, 2),
        }
        for row in summary.rows
    ]
    return "Refinement summary", {"rows": rows}, pd.DataFrame(rows)


def _metrics_payload(metrics: Metrics) -> Dict[str, Any]:
    percentages = metrics.column_percentages()
    return {
        **{k: _round(v, 4) for k, v in metrics.as_dict().items()},
        "labels": [label.label for label in metrics.labels],
        "confusion": metrics.confusion.tolist(),
        "column_percentages": [
            [None if np.isnan(v) else round(float(v), 1) for v in row] for row in percentages
        ],
        "flags": list(metrics.flags),
    }


def confusion_frame(metrics: Metrics, percentages: bool = False) -> pd.DataFrame:
    """Confusion matrix with actual classes as rows and predicted as columns"""
    names = [label.label for label in metrics.labels]
    values = metrics.column_percentages().round(1) if percentages else metrics.confusion
    frame = pd.DataFrame(values, columns=names)
    frame.insert(0, "actual", names)
    return frame


@view.register
def _(metrics: Metrics) -> View:
    return "Classifier metrics", _metrics_payload(metrics), confusion_frame(metrics)


def _score_rows(metrics: Dict[str, Metrics], **extra) -> List[Dict[str, Any]]:
    return [
        {**extra, "classifier": name, **{k: _round(v, 4) for k, v in m.as_dict().items()}}
        for name, m in metrics.items()
    ]


@view.register
def _(comparison: ClassifierComparison) -> View:
    payload = {
        "train_size": comparison.train_size,
        "test_size": comparison.test_size,
        "classifiers": {name: _metrics_payload(m) for name, m in comparison.metrics.items()},
        "reference": {
            name: dict(REFERENCE_SCORES[name])
            for name in comparison.metrics
            if name in REFERENCE_SCORES
        },
    }
    return "Classifier comparison", payload, pd.DataFrame(_score_rows(comparison.metrics))


@view.register
def _(report: MaiEffectReport) -> View:
    payload = {
        "train_size": report.train_size,
        "test_size": report.test_size,
        "mai_scope": report.mai_scope,
        "without_mai": {name: _metrics_payload(m) for name, m in report.without_mai.items()},
        "with_mai": {name: _metrics_payload(m) for name, m in report.with_mai.items()},
        "ca_delta": {name: _round(report.ca_delta(name), 4) for name in report.with_mai},
        "reference_ca": dict(report.reference_ca),
    }
    rows = _score_rows(report.without_mai, features="without MAI") + _score_rows(
        report.with_mai, features="with MAI"
    )
    return "Degree-class prediction", payload, pd.DataFrame(rows)


def render(report, fmt: str = "table", manifest: Optional[str] = None) -> str:
    """
    Render any report type

    Args:
        report: A report object (see the ``view`` registrations)
        fmt: csv, json or table
        manifest: Manifest file name to reference from the output

    Returns:
        Rendered text ending in a newline
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unsupported format: {fmt}")
    title, payload, frame = view(report)

    if fmt == "json":
        if manifest:
            payload = {**payload, "manifest": manifest}
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "csv":
        return frame.to_csv(index=False, lineterminator="\n")

    lines = [title]
    if manifest:
        lines.append(f"manifest: {manifest}")
    body = frame.to_string(index=False, na_rep="") if not frame.empty else "(empty)"
    lines.append(body)
    return "\n".join(lines) + "\n"
