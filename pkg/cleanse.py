"""
Cleanse Module

Pre-processing of transcript records:
- Infers missing assessment methods from the exam/coursework weightings
- Removes records whose module mark was never recorded

Present method labels are never overwritten; records whose method cannot be
inferred are kept and reported as unresolved.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from observability import get_logger
from transcript_model import (
    AssessmentMethod,
    InvariantError,
    MarkPipelineError,
    TranscriptRecord,
)

logger = get_logger("cleanse")


class InconsistentWeightingsError(MarkPipelineError):
    """Raised when both weightings are present but do not sum to 100"""

    def __init__(self, exam_weighting: int, cswk_weighting: int):
        self.exam_weighting = exam_weighting
        self.cswk_weighting = cswk_weighting
        super().__init__(
            f"inconsistent weightings: {exam_weighting} + {cswk_weighting} ≠ 100"
        )


@dataclass
class CleanseReport:
    """Counts produced by the cleansing steps"""

    input_size: int = 0
    methods_inferred: int = 0
    records_dropped: int = 0
    unresolved: int = 0
    label_conflicts: int = 0
    unresolved_keys: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def dropped_fraction(self) -> float:
        """records_dropped / input size (0 for empty input)"""
        if self.input_size == 0:
            return 0.0
        return self.records_dropped / self.input_size

    @property
    def dropped_percent(self) -> float:
        """The same drop expressed as a percentage"""
        return self.dropped_fraction * 100.0


def infer_assessment_method(
    exam_weighting: Optional[int], cswk_weighting: Optional[int]
) -> Optional[AssessmentMethod]:
    """
    Infer the assessment method from the weightings

    A lone coursework weighting is complemented to 100 first.

    Args:
        exam_weighting: Exam weighting (EXW) or None
        cswk_weighting: Coursework weighting (CWW) or None

    Returns:
        Exam, Coursework or Both; None when both weightings are missing

    Raises:
        InconsistentWeightingsError: Both present and not summing to 100
    """
    if exam_weighting is None and cswk_weighting is None:
        return None
    if exam_weighting is not None and cswk_weighting is not None:
        if exam_weighting + cswk_weighting != 100:
            raise InconsistentWeightingsError(exam_weighting, cswk_weighting)
    if exam_weighting is None:
        exam_weighting = 100 - cswk_weighting

    if exam_weighting == 100:
        return AssessmentMethod.EXAM
    if exam_weighting == 0:
        return AssessmentMethod.COURSEWORK
    return AssessmentMethod.BOTH


def _label_conflicts(record: TranscriptRecord) -> bool:
    try:
        inferred = infer_assessment_method(
            record.exam_weighting, record.cswk_weighting
        )
    except InconsistentWeightingsError:
        return True
    return inferred is not None and inferred is not record.assessment_method


def fill_missing_methods(
    records: List[TranscriptRecord],
) -> Tuple[List[TranscriptRecord], CleanseReport]:
    """
    Fill blank assessment methods from the weightings

    Args:
        records: Records in input order

    Returns:
        Tuple of (records with inferred labels, report)
    """
    report = CleanseReport(input_size=len(records))
    output: List[TranscriptRecord] = []

    for record in records:
        if record.assessment_method is not None:
            if _label_conflicts(record):
                report.label_conflicts += 1
            output.append(record)
            continue

        try:
            method = infer_assessment_method(
                record.exam_weighting, record.cswk_weighting
            )
        except InconsistentWeightingsError as e:
            logger.warning(
                "Cannot infer method", regno=record.regno, module=record.module_code, reason=str(e)
            )
            method = None

        if method is None:
            report.unresolved += 1
            report.unresolved_keys.append(record.key)
            output.append(record)
        else:
            report.methods_inferred += 1
            output.append(record.with_changes(assessment_method=method))

    logger.info(
        "Filled missing assessment methods",
        inferred=report.methods_inferred,
        unresolved=report.unresolved,
        label_conflicts=report.label_conflicts,
    )
    return output, report


def drop_markless(
    records: List[TranscriptRecord],
) -> Tuple[List[TranscriptRecord], CleanseReport]:
    """
    Remove records with no module mark

    Args:
        records: Records in input order

    Returns:
        Tuple of (surviving records in order, report with the dropped fraction)
    """
    kept = [r for r in records if r.module_mark is not None]
    report = CleanseReport(
        input_size=len(records), records_dropped=len(records) - len(kept)
    )
    logger.info(
        "Dropped markless records",
        dropped=report.records_dropped,
        fraction=report.dropped_fraction,
        percent=report.dropped_percent,
    )
    return kept, report


def cleanse(
    records: List[TranscriptRecord],
) -> Tuple[List[TranscriptRecord], CleanseReport]:
    """
    Fill missing methods, then drop markless records

    Returns:
        Tuple of (cleaned records, merged report)
    """
    filled, fill_report = fill_missing_methods(records)
    kept, drop_report = drop_markless(filled)

    unresolved_keys = [r.key for r in kept if r.assessment_method is None]

    report = CleanseReport(
        input_size=len(records),
        methods_inferred=fill_report.methods_inferred,
        records_dropped=drop_report.records_dropped,
        unresolved=len(unresolved_keys),
        label_conflicts=fill_report.label_conflicts,
        unresolved_keys=unresolved_keys,
    )
    return kept, report


def check_cleansed(
    records: List[TranscriptRecord],
    cleaned: List[TranscriptRecord],
    report: CleanseReport,
):
    """Raise InvariantError unless kept plus dropped accounts for every input"""
    if len(cleaned) + report.records_dropped != len(records):
        raise InvariantError(
            f"cleanse kept {len(cleaned)} and dropped {report.records_dropped} "
            f"of {len(records)} records"
        )
