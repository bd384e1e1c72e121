"""
Module Assessment Index (MAI)

Per-department ratio class tables and the mapping of a module's
EXW:CWW weighting ratio to its categorical index.

Convention: MAI 0 is the pure-exam class (100:0) and the largest index is
the pure-coursework class (0:100). Classes are ranked by coursework weighting.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union

import pandas as pd

from observability import get_logger
from transcript_model import (
    Department,
    MarkPipelineError,
    NoRecordsError,
    RefinedRecord,
    TranscriptRecord,
)

logger = get_logger("mai")

RatioPair = Tuple[int, int]


class UnknownRatioClassError(MarkPipelineError):
    """Raised when a weighting pair is not one of the department's classes"""

    def __init__(self, exam_weighting: int, cswk_weighting: int, department: Department):
        self.pair = (exam_weighting, cswk_weighting)
        self.department = department
        super().__init__(
            f"unknown ratio class {exam_weighting}:{cswk_weighting} "
            f"for {department.value}"
        )


class ClassTableError(MarkPipelineError):
    """Raised when a class table breaks its invariants"""

    pass


@dataclass(frozen=True)
class ClassTable:
    """A department's ordered EXW:CWW ratio classes"""

    department: Department
    classes: Tuple[RatioPair, ...]

    def __post_init__(self):
        pairs = tuple(sorted(self.classes, key=lambda p: p[1]))
        object.__setattr__(self, "classes", pairs)
        problems = _table_problems(pairs)
        if problems:
            raise ClassTableError(
                f"invalid class table for {self.department.value}: {'; '.join(problems)}"
            )
        object.__setattr__(
            self, "_index", {pair: rank for rank, pair in enumerate(pairs)}
        )

    def __len__(self) -> int:
        return len(self.classes)

    @property
    def mai_range(self) -> int:
        """Largest MAI value of the table"""
        return len(self.classes) - 1

    def ratio_for(self, mai: int) -> RatioPair:
        """The (EXW, CWW) class ranked at ``mai``"""
        return self.classes[mai]

    def index_of(self, pair: RatioPair) -> int:
        rank = self._index.get(pair)
        if rank is None:
            raise UnknownRatioClassError(pair[0], pair[1], self.department)
        return rank


def _table_problems(pairs: Tuple[RatioPair, ...]) -> List[str]:
    problems = []
    for exw, cww in pairs:
        if exw + cww != 100:
            problems.append(f"{exw}:{cww} does not sum to 100")
    if len(set(pairs)) != len(pairs):
        problems.append("duplicate classes")
    if not pairs or pairs[0] != (100, 0):
        problems.append("missing the 100:0 class")
    if not pairs or pairs[-1] != (0, 100):
        problems.append("missing the 0:100 class")
    return problems


def _pairs(exam_weightings: Iterable[int]) -> Tuple[RatioPair, ...]:
    return tuple((exw, 100 - exw) for exw in exam_weightings)


# Ratio classes in use per department, as EXW values
BUILTIN_CLASS_TABLES: Dict[Department, ClassTable] = {
    Department.BUSINESS: ClassTable(
        Department.BUSINESS, _pairs([100, 90, 80, 75, 70, 60, 50, 40, 35, 0])
    ),
    Department.CS: ClassTable(
        Department.CS, _pairs([100, 90, 80, 75, 70, 60, 50, 45, 40, 35, 30, 0])
    ),
    Department.CIVIL_ENG: ClassTable(
        Department.CIVIL_ENG, _pairs([100, 85, 80, 75, 70, 60, 55, 50, 40, 25, 0])
    ),
    Department.ECS_ENG: ClassTable(
        Department.ECS_ENG, _pairs([100, 90, 85, 80, 75, 70, 65, 60, 50, 40, 34, 0])
    ),
    Department.MATH: ClassTable(
        Department.MATH, _pairs([100, 90, 80, 75, 70, 60, 50, 30, 0])
    ),
    Department.MECH_ENG: ClassTable(
        Department.MECH_ENG, _pairs([100, 90, 80, 75, 70, 60, 50, 30, 25, 0])
    ),
}


def class_table(department: Department) -> ClassTable:
    """
    Built-in ratio class table of a department

    Args:
        department: One of the six departments

    Returns:
        The department's ClassTable
    """
    return BUILTIN_CLASS_TABLES[department]


def load_class_tables(path: Union[str, Path]) -> Dict[Department, ClassTable]:
    """
    Load class tables from a CSV override file

    Columns: department, exam_weighting, cswk_weighting (case-insensitive).
    Departments not listed keep their built-in tables.

    Args:
        path: CSV file path

    Returns:
        Mapping of department to ClassTable (built-ins merged with overrides)
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ClassTableError(f"cannot read class tables from {path}: {e}")

    frame.columns = [str(c).strip().lower() for c in frame.columns]
    required = {"department", "exam_weighting", "cswk_weighting"}
    if not required.issubset(frame.columns):
        raise ClassTableError(
            f"class table file needs columns {sorted(required)}, got {list(frame.columns)}"
        )

    grouped: Dict[Department, List[RatioPair]] = {}
    for line, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            dept = Department.parse(row.department)
            pair = (int(row.exam_weighting), int(row.cswk_weighting))
        except ValueError as e:
            raise ClassTableError(f"{path}:{line}: {e}")
        grouped.setdefault(dept, []).append(pair)

    tables = dict(BUILTIN_CLASS_TABLES)
    for dept, pairs in grouped.items():
        tables[dept] = ClassTable(dept, tuple(pairs))
        logger.info(
            "Loaded class table override", department=dept.value, classes=len(pairs)
        )
    return tables


def categorize(exam_weighting: int, cswk_weighting: int, table: ClassTable) -> int:
    """
    Map a weighting ratio to its MAI

    MAI 0 is pure exam; ``len(table) - 1`` is pure coursework. Only exact
    class matches are accepted.

    Args:
        exam_weighting: EXW
        cswk_weighting: CWW
        table: Department class table

    Returns:
        Rank of the ratio class in table order

    Raises:
        UnknownRatioClassError: Pair is not a class of the table
    """
    return table.index_of((exam_weighting, cswk_weighting))


def record_mai(record: TranscriptRecord, table: ClassTable) -> int:
    """MAI of a record, imputing a single missing weighting"""
    pair = record.resolved_weightings()
    if pair is None:
        raise UnknownRatioClassError(
            record.exam_weighting, record.cswk_weighting, table.department
        )
    return categorize(pair[0], pair[1], table)


def average_mai(records: List[RefinedRecord]) -> float:
    """
    Mean MAI over one student-year's records

    Raises:
        NoRecordsError: Empty list
    """
    if not records:
        raise NoRecordsError("average_mai")
    return sum(r.mai for r in records) / len(records)
