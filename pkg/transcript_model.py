"""
Transcript Model Module

Domain types shared by every pipeline stage: transcript records, refined
records, departments, assessment methods and degree classes, plus the
record validator and the exception hierarchy the CLI maps to exit codes.
"""

from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import List, Optional, Tuple


class MarkPipelineError(Exception):
    """Base exception for data problems in any pipeline stage"""

    exit_code = 3


class InvariantError(MarkPipelineError):
    """Raised when an internal invariant does not hold"""

    exit_code = 4


class NoRecordsError(MarkPipelineError):
    """Raised when an operation needs at least one record"""

    def __init__(self, operation: str):
        self.operation = operation
        super().__init__(f"no records: {operation}")


class Department(str, Enum):
    """The six departments of the transcript data"""

    BUSINESS = "Business"
    CIVIL_ENG = "CivilEng"
    CS = "CS"
    ECS_ENG = "ECSEng"
    MATH = "Math"
    MECH_ENG = "MechEng"

    @classmethod
    def parse(cls, name: str) -> "Department":
        """
        Parse a department name case-insensitively

        Args:
            name: Department value such as "CS" or "mecheng"

        Returns:
            Department enum member
        """
        key = name.strip().lower()
        for dept in cls:
            if dept.value.lower() == key:
                return dept
        raise ValueError(f"unknown department {name!r}")


class AssessmentMethod(str, Enum):
    """How a module's mark is produced"""

    EXAM = "Exam"
    COURSEWORK = "Coursework"
    BOTH = "Both"

    @classmethod
    def parse(cls, value: str) -> "AssessmentMethod":
        key = value.strip().lower()
        for method in cls:
            if method.value.lower() == key:
                return method
        raise ValueError(f"unknown assessment method {value!r}")


class MarkClass(int, Enum):
    """Degree-class outcome bands, ordered Fail < ... < First"""

    FAIL = 0
    PASS = 1
    THIRD = 2
    LOWER_SECOND = 3
    UPPER_SECOND = 4
    FIRST = 5

    @property
    def label(self) -> str:
        return _MARK_CLASS_LABELS[self]


_MARK_CLASS_LABELS = {
    MarkClass.FAIL: "Fail",
    MarkClass.PASS: "Pass",
    MarkClass.THIRD: "Third",
    MarkClass.LOWER_SECOND: "Lower second",
    MarkClass.UPPER_SECOND: "Upper second",
    MarkClass.FIRST: "First",
}

MARK_FIELDS = ("module_mark", "exam_mark", "cswk_mark")
WEIGHTING_FIELDS = ("exam_weighting", "cswk_weighting")


@dataclass(frozen=True)
class TranscriptRecord:
    """One student-module row"""

    regno: str
    module_code: str
    program_code: str
    department: Department
    module_mark: Optional[float] = None
    exam_mark: Optional[float] = None
    cswk_mark: Optional[float] = None
    exam_weighting: Optional[int] = None
    cswk_weighting: Optional[int] = None
    assessment_method: Optional[AssessmentMethod] = None
    year_of_study: int = 1

    @property
    def key(self) -> Tuple[str, str]:
        """(regno, module_code) identifying the row in reports"""
        return (self.regno, self.module_code)

    def resolved_weightings(self) -> Optional[Tuple[int, int]]:
        """
        Weighting pair with a single missing side imputed

        EXW and CWW complement each other to 100, so one present value
        determines the other.

        Returns:
            (exam_weighting, cswk_weighting), or None when both are missing
        """
        exw, cww = self.exam_weighting, self.cswk_weighting
        if exw is None and cww is None:
            return None
        if exw is None:
            exw = 100 - cww
        if cww is None:
            cww = 100 - exw
        return (exw, cww)

    def with_changes(self, **changes) -> "TranscriptRecord":
        return replace(self, **changes)


@dataclass(frozen=True)
class RefinedRecord(TranscriptRecord):
    """A transcript record with its assessment index and refined mark"""

    mai: int = 0
    rmm: float = 0.0
    flag: Optional[str] = None

    @classmethod
    def from_record(
        cls,
        record: TranscriptRecord,
        mai: int,
        rmm: float,
        flag: Optional[str] = None,
    ) -> "RefinedRecord":
        base = {f.name: getattr(record, f.name) for f in fields(TranscriptRecord)}
        return cls(**base, mai=mai, rmm=rmm, flag=flag)

    def transcript(self) -> TranscriptRecord:
        """The underlying transcript record without refinement fields"""
        return TranscriptRecord(
            **{f.name: getattr(self, f.name) for f in fields(TranscriptRecord)}
        )


@dataclass(frozen=True)
class Violation:
    """One broken record invariant"""

    field: str
    rule: str
    message: str


def _in_range(value, low, high) -> bool:
    return low <= value <= high


def validate(record: TranscriptRecord) -> List[Violation]:
    """
    Check a record against the transcript invariants

    Args:
        record: Record to check

    Returns:
        List of violations, empty when every invariant holds
    """
    violations: List[Violation] = []

    for name in MARK_FIELDS:
        value = getattr(record, name)
        if value is not None and not _in_range(value, 0.0, 100.0):
            violations.append(
                Violation(name, "mark range", f"{name}={value} outside [0, 100]")
            )

    for name in WEIGHTING_FIELDS:
        value = getattr(record, name)
        if value is not None and not _in_range(value, 0, 100):
            violations.append(
                Violation(
                    name, "weighting range", f"{name}={value} outside [0, 100]"
                )
            )

    exw, cww = record.exam_weighting, record.cswk_weighting
    if exw is not None and cww is not None and exw + cww != 100:
        violations.append(
            Violation(
                "cswk_weighting",
                "weighting sum",
                f"weighting sum ≠ 100 ({exw} + {cww})",
            )
        )

    method = record.assessment_method
    if method is not None:
        pair = record.resolved_weightings()
        if pair is not None:
            exw_r, cww_r = pair
            consistent = (
                (method is AssessmentMethod.EXAM and exw_r == 100)
                or (method is AssessmentMethod.COURSEWORK and cww_r == 100)
                or (method is AssessmentMethod.BOTH and exw_r not in (0, 100))
            )
            if not consistent:
                violations.append(
                    Violation(
                        "assessment_method",
                        "method/weighting mismatch",
                        f"method/weighting mismatch: {method.value} with "
                        f"EXW {exw_r}, CWW {cww_r}",
                    )
                )

    if record.year_of_study < 1:
        violations.append(
            Violation(
                "year_of_study",
                "year range",
                f"year_of_study={record.year_of_study} below 1",
            )
        )

    return violations
