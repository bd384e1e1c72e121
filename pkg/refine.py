"""
Refine Module

Applies the MAI-dependent quadratic delta to module marks:

    RMM = MM + beta1 * MAI + beta2 * MAI^2     (MAI > 0)
    RMM = MM                                   (MAI = 0)

clamped to [0, 100], and summarizes refinements per assessment method and
per student-year.
"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from mai import ClassTable, UnknownRatioClassError, class_table, record_mai
from observability import get_logger
from transcript_model import (
    AssessmentMethod,
    Department,
    InvariantError,
    MarkPipelineError,
    NoRecordsError,
    RefinedRecord,
    TranscriptRecord,
)

logger = get_logger("refine")

FLAG_UNKNOWN_RATIO = "unknown_ratio_class"
FLAG_MISSING_WEIGHTING = "missing_weighting"

# Department the default coefficients were fitted on
COEFFS_FITTED_ON = Department.CS


@dataclass(frozen=True)
class RefineCoeffs:
    """Linear and quadratic coefficients of the refinement delta"""

    beta1: float = 0.0035
    beta2: float = -0.05688

    def __post_init__(self):
        if not (np.isfinite(self.beta1) and np.isfinite(self.beta2)):
            raise ValueError(f"coefficients must be finite: {self.beta1}, {self.beta2}")

    def delta(self, mai: int) -> float:
        """Mark change at a given MAI (0 at MAI 0)"""
        if mai == 0:
            return 0.0
        return self.beta1 * mai + self.beta2 * mai * mai


DEFAULT_COEFFS = RefineCoeffs()


def rmm(module_mark: float, mai: int, coeffs: RefineCoeffs = DEFAULT_COEFFS) -> float:
    """
    Refined module mark

    Args:
        module_mark: Current mark in [0, 100]
        mai: Module assessment index (>= 0)
        coeffs: Refinement coefficients

    Returns:
        The mark unchanged when MAI is 0, otherwise MM plus the delta,
        clamped to [0, 100]
    """
    if mai == 0:
        return module_mark
    return float(min(100.0, max(0.0, module_mark + coeffs.delta(mai))))


def coefficient_warning(department: Department, coeffs: RefineCoeffs) -> Optional[str]:
    """Message when CS-fitted default coefficients are used for another department"""
    if coeffs == DEFAULT_COEFFS and department is not COEFFS_FITTED_ON:
        return (
            f"default coefficients were fitted on {COEFFS_FITTED_ON.value}; "
            f"applying them to {department.value}"
        )
    return None


TableSource = Union[ClassTable, Mapping[Department, ClassTable], None]


def _table_for(tables: TableSource, department: Department) -> ClassTable:
    if tables is None:
        return class_table(department)
    if isinstance(tables, ClassTable):
        return tables
    return tables.get(department) or class_table(department)


def refine_all(
    records: List[TranscriptRecord],
    tables: TableSource = None,
    coeffs: RefineCoeffs = DEFAULT_COEFFS,
) -> List[RefinedRecord]:
    """
    Refine every record

    Records whose ratio is not a class of their department's table (or that
    carry no weightings at all) pass through with a flag, MAI 0 and RMM = MM.

    Args:
        records: Records with module marks
        tables: One table, a department mapping, or None for the built-ins
        coeffs: Refinement coefficients

    Returns:
        One RefinedRecord per input, same order
    """
    refined: List[RefinedRecord] = []
    flagged = 0
    warned = set()

    for record in records:
        if record.module_mark is None:
            raise MarkPipelineError(
                f"refine needs module marks; {record.regno}/{record.module_code} has none"
            )

        if record.department not in warned:
            message = coefficient_warning(record.department, coeffs)
            if message:
                logger.warning(message)
            warned.add(record.department)

        table = _table_for(tables, record.department)
        if record.resolved_weightings() is None:
            refined.append(
                RefinedRecord.from_record(
                    record, mai=0, rmm=record.module_mark, flag=FLAG_MISSING_WEIGHTING
                )
            )
            flagged += 1
            continue

        try:
            index = record_mai(record, table)
        except UnknownRatioClassError as e:
            logger.debug("Passing record through", regno=record.regno, reason=str(e))
            refined.append(
                RefinedRecord.from_record(
                    record, mai=0, rmm=record.module_mark, flag=FLAG_UNKNOWN_RATIO
                )
            )
            flagged += 1
            continue

        refined.append(
            RefinedRecord.from_record(
                record, mai=index, rmm=rmm(record.module_mark, index, coeffs)
            )
        )

    logger.info("Refined records", records=len(refined), flagged=flagged)
    return refined


TOTAL_LABEL = "Total"
UNLABELLED = "Unlabelled"

_METHOD_ORDER = [
    AssessmentMethod.EXAM,
    AssessmentMethod.COURSEWORK,
    AssessmentMethod.BOTH,
]


@dataclass(frozen=True)
class SummaryRow:
    """One group of a refinement summary"""

    label: str
    module_count: int
    mean_mm: float
    mean_rmm: float

    @property
    def mean_delta(self) -> float:
        return self.mean_rmm - self.mean_mm


@dataclass(frozen=True)
class RefinementSummary:
    """Average MM and RMM per assessment method plus a total row"""

    groups: Tuple[SummaryRow, ...]
    total: SummaryRow

    @property
    def rows(self) -> Tuple[SummaryRow, ...]:
        return self.groups + (self.total,)


def _row(label: str, records: List[RefinedRecord]) -> SummaryRow:
    return SummaryRow(
        label=label,
        module_count=len(records),
        mean_mm=float(np.mean([r.module_mark for r in records])),
        mean_rmm=float(np.mean([r.rmm for r in records])),
    )


def summarize_refinement(records: List[RefinedRecord]) -> RefinementSummary:
    """
    Group refined records by assessment method

    Args:
        records: Refined records, typically one student's

    Returns:
        RefinementSummary with rows in Exam, Coursework, Both order (only
        groups present), an Unlabelled row for records without a method, and
        the Total row

    Raises:
        NoRecordsError: Empty input
    """
    if not records:
        raise NoRecordsError("summarize_refinement")

    by_method: Dict[Optional[AssessmentMethod], List[RefinedRecord]] = defaultdict(list)
    for record in records:
        by_method[record.assessment_method].append(record)

    groups = [
        _row(method.value, by_method[method])
        for method in _METHOD_ORDER
        if by_method.get(method)
    ]
    if by_method.get(None):
        groups.append(_row(UNLABELLED, by_method[None]))

    return RefinementSummary(groups=tuple(groups), total=_row(TOTAL_LABEL, records))


@dataclass(frozen=True)
class StudentYearAverage:
    """Per student-year averages of MM, RMM and MAI"""

    regno: str
    year_of_study: int
    department: Department
    module_count: int
    mean_mm: float
    mean_rmm: float
    mean_mai: Optional[float]

    @property
    def mean_delta(self) -> float:
        return self.mean_rmm - self.mean_mm


def student_averages(records: List[RefinedRecord]) -> List[StudentYearAverage]:
    """
    Average each student's marks per year of study

    Flagged (unrefined) records count toward the mark averages but not the
    MAI average.

    Returns:
        One entry per (regno, year) in order of first appearance
    """
    grouped: Dict[Tuple[str, int], List[RefinedRecord]] = {}
    for record in records:
        grouped.setdefault((record.regno, record.year_of_study), []).append(record)

    averages = []
    for (regno, year), group in grouped.items():
        indexed = [r.mai for r in group if r.flag is None]
        averages.append(
            StudentYearAverage(
                regno=regno,
                year_of_study=year,
                department=group[0].department,
                module_count=len(group),
                mean_mm=float(np.mean([r.module_mark for r in group])),
                mean_rmm=float(np.mean([r.rmm for r in group])),
                mean_mai=float(np.mean(indexed)) if indexed else None,
            )
        )
    return averages


def check_refined(records: List[TranscriptRecord], refined: List[RefinedRecord]):
    """
    Raise InvariantError unless refined pairs one-to-one, in order, with
    records and every RMM lies in [0, 100]
    """
    if len(refined) != len(records):
        raise InvariantError(f"refine produced {len(refined)} records from {len(records)}")
    for position, (record, out) in enumerate(zip(records, refined)):
        if out.key != record.key or out.module_mark != record.module_mark:
            raise InvariantError(
                f"refined record {position} ({out.regno}/{out.module_code}) "
                f"does not match input {record.regno}/{record.module_code}"
            )
        if not 0.0 <= out.rmm <= 100.0:
            raise InvariantError(f"RMM {out.rmm} of {out.regno}/{out.module_code} outside [0, 100]")
