"""
Ingest Module

Reads comma-separated transcript files into TranscriptRecord lists with
schema validation and per-row error accounting.

Features:
- Header names matched case-insensitively
- Blank cells map to missing values
- Per-row type/range errors and rows with extra cells reject the row
- Unreadable sources and missing mandatory columns are fatal
- Optional per-row department column (falls back to the file department)
"""

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, TextIO, Tuple, Union

import pandas as pd

from observability import get_logger
from transcript_model import (
    AssessmentMethod,
    Department,
    InvariantError,
    MarkPipelineError,
    RefinedRecord,
    TranscriptRecord,
)

logger = get_logger("ingest")

TRANSCRIPT_COLUMNS = (
    "regno",
    "module_code",
    "program_code",
    "module_mark",
    "exam_mark",
    "cswk_mark",
    "exam_weighting",
    "cswk_weighting",
    "assessment_method",
    "year_of_study",
)
OPTIONAL_COLUMNS = ("department",)
REFINED_COLUMNS = ("mai", "rmm", "flag")
MANDATORY_COLUMNS = ("regno", "module_code")

_MARK_COLUMNS = ("module_mark", "exam_mark", "cswk_mark")
_WEIGHTING_COLUMNS = ("exam_weighting", "cswk_weighting")


class IngestError(MarkPipelineError):
    """Fatal ingest failure (unreadable source or missing mandatory column)"""

    pass


class RowRejected(ValueError):
    """A single row failed type or range checks"""

    pass


@dataclass
class IngestReport:
    """Row accounting for one parsed source"""

    rows_read: int = 0
    rows_accepted: int = 0
    rows_rejected: int = 0
    rejects: List[Tuple[int, str]] = field(default_factory=list)
    ignored_columns: List[str] = field(default_factory=list)

    def reject(self, line: int, reason: str):
        self.rows_rejected += 1
        self.rejects.append((line, reason))


# Source line number carried through the frame
_LINE_COLUMN = "__line__"


def _read_frame(source: TextIO) -> Tuple[pd.DataFrame, List[Tuple[int, str]]]:
    """
    Read every row as strings, tagged with its source line

    Rows with more cells than the header are returned as rejects instead of
    failing the whole read. Each physical line is one row.

    Returns:
        Tuple of (frame with a line-number column, [(line, reason)] for long rows)
    """
    try:
        text = source.read()
        columns = list(pd.read_csv(io.StringIO(text), nrows=0, skipinitialspace=True).columns)
    except (
        pd.errors.EmptyDataError,
        pd.errors.ParserError,
        UnicodeDecodeError,
        OSError,
    ) as e:
        raise IngestError(f"unreadable transcript source: {e}")

    long_rows: List[Tuple[int, str]] = []

    def reject_long_row(cells: List[str]) -> None:
        long_rows.append(
            (int(cells[0]), f"{len(cells) - 1} cells, header has {len(columns)}")
        )
        return None

    numbered = "\n".join(
        f"{number},{line}" for number, line in enumerate(text.splitlines(), start=1)
    )
    try:
        frame = pd.read_csv(
            io.StringIO(numbered),
            header=None,
            names=[_LINE_COLUMN] + columns,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            skipinitialspace=True,
            engine="python",
            on_bad_lines=reject_long_row,
        )
    except pd.errors.ParserError as e:
        raise IngestError(f"unreadable transcript source: {e}")
    # first row is the header line itself
    return frame.iloc[1:].copy(), long_rows


def _column_map(frame: pd.DataFrame, known: Tuple[str, ...]) -> Dict[str, str]:
    """Map schema names to the frame's actual header tokens"""
    mapping: Dict[str, str] = {}
    for column in frame.columns:
        token = str(column).strip().lower()
        if token in known and token not in mapping:
            mapping[token] = column
    return mapping


def _cell(row: pd.Series, mapping: Dict[str, str], name: str) -> str:
    column = mapping.get(name)
    if column is None:
        return ""
    value = row[column]
    if pd.isna(value):
        return ""
    return str(value).strip()


def _parse_mark(text: str, name: str) -> Optional[float]:
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise RowRejected(f"non-numeric {name}")
    if not 0.0 <= value <= 100.0:
        raise RowRejected(f"{name} {value} outside [0, 100]")
    return value


def _parse_weighting(text: str, name: str) -> Optional[int]:
    if text == "":
        return None
    try:
        number = float(text)
    except ValueError:
        raise RowRejected(f"non-numeric {name}")
    if not number.is_integer():
        raise RowRejected(f"non-integer {name}")
    value = int(number)
    if not 0 <= value <= 100:
        raise RowRejected(f"{name} {value} outside [0, 100]")
    return value


def _parse_row(
    row: pd.Series, mapping: Dict[str, str], department: Department
) -> TranscriptRecord:
    regno = _cell(row, mapping, "regno")
    module_code = _cell(row, mapping, "module_code")
    if regno == "":
        raise RowRejected("missing regno")
    if module_code == "":
        raise RowRejected("missing module_code")

    dept_text = _cell(row, mapping, "department")
    if dept_text:
        try:
            department = Department.parse(dept_text)
        except ValueError:
            raise RowRejected(f"unknown department {dept_text!r}")

    method_text = _cell(row, mapping, "assessment_method")
    method = None
    if method_text:
        try:
            method = AssessmentMethod.parse(method_text)
        except ValueError:
            raise RowRejected(f"unknown assessment_method {method_text!r}")

    year_text = _cell(row, mapping, "year_of_study")
    year = 1
    if year_text:
        try:
            year = int(year_text)
        except ValueError:
            raise RowRejected("non-integer year_of_study")
        if year < 1:
            raise RowRejected(f"year_of_study {year} below 1")

    marks = {name: _parse_mark(_cell(row, mapping, name), name) for name in _MARK_COLUMNS}
    weights = {
        name: _parse_weighting(_cell(row, mapping, name), name)
        for name in _WEIGHTING_COLUMNS
    }

    return TranscriptRecord(
        regno=regno,
        module_code=module_code,
        program_code=_cell(row, mapping, "program_code"),
        department=department,
        assessment_method=method,
        year_of_study=year,
        **marks,
        **weights,
    )


def _parse_refinement(row: pd.Series, mapping: Dict[str, str]) -> Tuple[int, float, Optional[str]]:
    mai_text = _cell(row, mapping, "mai")
    rmm_text = _cell(row, mapping, "rmm")
    try:
        mai = int(mai_text)
    except ValueError:
        raise RowRejected("non-integer mai")
    if mai < 0:
        raise RowRejected(f"mai {mai} below 0")
    rmm = _parse_mark(rmm_text, "rmm")
    if rmm is None:
        raise RowRejected("missing rmm")
    flag = _cell(row, mapping, "flag") or None
    return mai, rmm, flag


def _parse(
    source: TextIO, department: Department, refined: bool
) -> Tuple[list, IngestReport]:
    frame, long_rows = _read_frame(source)
    line_numbers = frame.pop(_LINE_COLUMN).astype(int)
    known = TRANSCRIPT_COLUMNS + OPTIONAL_COLUMNS + (REFINED_COLUMNS if refined else ())
    mapping = _column_map(frame, known)

    missing = [name for name in MANDATORY_COLUMNS if name not in mapping]
    if refined:
        missing += [name for name in ("mai", "rmm") if name not in mapping]
    if missing:
        raise IngestError(f"missing mandatory column(s): {', '.join(missing)}")

    report = IngestReport(
        ignored_columns=[
            str(c) for c in frame.columns if str(c).strip().lower() not in known
        ]
    )
    records: list = []
    rejects: List[Tuple[int, str]] = list(long_rows)

    for line, (_, row) in zip(line_numbers, frame.iterrows()):
        try:
            record = _parse_row(row, mapping, department)
            if refined:
                mai, rmm, flag = _parse_refinement(row, mapping)
                record = RefinedRecord.from_record(record, mai=mai, rmm=rmm, flag=flag)
        except RowRejected as e:
            rejects.append((int(line), str(e)))
            continue
        records.append(record)
        report.rows_accepted += 1

    for line, reason in sorted(rejects):
        report.reject(line, reason)
    report.rows_read = len(frame) + len(long_rows)

    logger.info(
        "Parsed transcript source",
        department=department.value,
        rows_read=report.rows_read,
        rows_accepted=report.rows_accepted,
        rows_rejected=report.rows_rejected,
    )
    if report.ignored_columns:
        logger.warning("Ignoring unknown columns", columns=report.ignored_columns)
    return records, report


def parse_transcripts(
    source: TextIO, department: Department
) -> Tuple[List[TranscriptRecord], IngestReport]:
    """
    Parse a transcript CSV stream

    Args:
        source: Text stream with a header row
        department: Department of the file (used for rows without their own)

    Returns:
        Tuple of (accepted records in input order, ingest report)

    Raises:
        IngestError: Unreadable stream or missing regno/module_code column
    """
    return _parse(source, department, refined=False)


def parse_refined(
    source: TextIO, department: Department
) -> Tuple[List[RefinedRecord], IngestReport]:
    """
    Parse a refined-record CSV stream (transcript columns plus mai, rmm, flag)

    Args:
        source: Text stream written by report.write_refined
        department: Default department for rows without their own

    Returns:
        Tuple of (refined records, ingest report)
    """
    return _parse(source, department, refined=True)


def _open(path: Union[str, Path]) -> TextIO:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise IngestError(f"cannot read {path}: {e}")
    return io.StringIO(text)


def read_transcript_file(
    path: Union[str, Path], department: Department
) -> Tuple[List[TranscriptRecord], IngestReport]:
    """Parse a transcript CSV file"""
    return parse_transcripts(_open(path), department)


def read_refined_file(
    path: Union[str, Path], department: Department
) -> Tuple[List[RefinedRecord], IngestReport]:
    """Parse a refined-record CSV file"""
    return parse_refined(_open(path), department)


def check_ingest_report(report: IngestReport):
    """Raise InvariantError unless every row read was accepted or rejected"""
    if report.rows_read != report.rows_accepted + report.rows_rejected:
        raise InvariantError(
            f"read {report.rows_read} rows but accepted {report.rows_accepted} "
            f"and rejected {report.rows_rejected}"
        )
