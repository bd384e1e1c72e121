"""
Statistics Module

Statistical battery for transcript data:
- Group means per department and assessment method
- Paired t-tests with two-tailed p-values from the regularized incomplete beta
- Pearson correlation and correlation matrices over record fields
- Linear/quadratic least-squares fits with R-squared, model comparison and
  fitting of refinement coefficients

Ships the published department means as reference data so the t-tests run
without any input file.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from observability import get_logger
from refine import RefineCoeffs
from transcript_model import (
    AssessmentMethod,
    Department,
    MarkPipelineError,
    NoRecordsError,
    RefinedRecord,
    TranscriptRecord,
)

logger = get_logger("stats")


class DegenerateDataError(MarkPipelineError):
    """Raised when data cannot support the requested statistic"""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class TTestResult:
    """Paired t-test outcome"""

    t: float
    p: float
    df: int
    mean_diff: float


@dataclass(frozen=True)
class QuadFit:
    """Polynomial least-squares fit (beta2 is 0 for linear fits)"""

    beta0: float
    beta1: float
    beta2: float
    r_squared: float
    degree: int = 2

    def predict(self, x: float) -> float:
        return self.beta0 + self.beta1 * x + self.beta2 * x * x


@dataclass(frozen=True)
class GroupMeansRow:
    """One department row of a group means table"""

    department: Department
    student_count: int
    exam: Optional[float]
    coursework: Optional[float]
    both: Optional[float]

    def mean(self, method: AssessmentMethod) -> Optional[float]:
        return {
            AssessmentMethod.EXAM: self.exam,
            AssessmentMethod.COURSEWORK: self.coursework,
            AssessmentMethod.BOTH: self.both,
        }[method]


@dataclass(frozen=True)
class GroupMeansTable:
    """Average module marks per department and assessment method"""

    rows: Tuple[GroupMeansRow, ...]

    def row(self, department: Department) -> Optional[GroupMeansRow]:
        for row in self.rows:
            if row.department is department:
                return row
        return None

    def column(self, method: AssessmentMethod) -> List[Optional[float]]:
        return [row.mean(method) for row in self.rows]


# Published per-department means (students, exam, coursework, mixed)
PUBLISHED_MEANS = GroupMeansTable(
    rows=(
        GroupMeansRow(Department.BUSINESS, 54960, 59.77, 60.83, 60.01),
        GroupMeansRow(Department.CIVIL_ENG, 34892, 58.78, 63.74, 60.70),
        GroupMeansRow(Department.CS, 19800, 58.18, 64.40, 58.87),
        GroupMeansRow(Department.ECS_ENG, 13740, 59.55, 63.26, 57.00),
        GroupMeansRow(Department.MATH, 24152, 61.59, 66.00, 61.17),
        GroupMeansRow(Department.MECH_ENG, 31385, 58.80, 64.26, 60.24),
    )
)

# R-squared values reported for the CS department (reference only)
REFERENCE_R_SQUARED = {1: 0.0277, 2: 0.0290}

_PAIRS = (
    ("Exam-Coursework", AssessmentMethod.EXAM, AssessmentMethod.COURSEWORK),
    ("Coursework-Both", AssessmentMethod.COURSEWORK, AssessmentMethod.BOTH),
    ("Exam-Both", AssessmentMethod.EXAM, AssessmentMethod.BOTH),
)


def group_means(records: List[TranscriptRecord]) -> GroupMeansTable:
    """
    Mean module mark per (department, assessment method)

    Records without a mark or method are skipped. Student counts are distinct
    regnos per department.

    Returns:
        GroupMeansTable in department enum order; empty cells are None
    """
    sums: Dict[Tuple[Department, AssessmentMethod], List[float]] = {}
    students: Dict[Department, set] = {}

    for record in records:
        if record.module_mark is None or record.assessment_method is None:
            continue
        sums.setdefault((record.department, record.assessment_method), []).append(
            record.module_mark
        )
        students.setdefault(record.department, set()).add(record.regno)

    def cell(dept, method):
        values = sums.get((dept, method))
        return float(np.mean(values)) if values else None

    rows = tuple(
        GroupMeansRow(
            department=dept,
            student_count=len(students[dept]),
            exam=cell(dept, AssessmentMethod.EXAM),
            coursework=cell(dept, AssessmentMethod.COURSEWORK),
            both=cell(dept, AssessmentMethod.BOTH),
        )
        for dept in Department
        if dept in students
    )
    return GroupMeansTable(rows=rows)


def t_two_tailed_p(t: float, df: int) -> float:
    """
    Two-tailed p-value of a t statistic

    P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)

    Args:
        t: t statistic
        df: Degrees of freedom (>= 1)

    Returns:
        p in [0, 1]
    """
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(min(1.0, max(0.0, special.betainc(df / 2.0, 0.5, x))))


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """
    Paired t-test on d = a - b

    Args:
        a: First sample
        b: Second sample, paired element-wise with a

    Returns:
        TTestResult with df = n - 1 and two-tailed p

    Raises:
        DegenerateDataError: Length mismatch, fewer than 2 pairs, or zero
            variance of the differences ("degenerate pairs")
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if a_arr.shape != b_arr.shape:
        raise DegenerateDataError("length mismatch", f"{a_arr.size} vs {b_arr.size}")
    n = a_arr.size
    if n < 2:
        raise DegenerateDataError("degenerate pairs", f"need >= 2 pairs, got {n}")

    diff = a_arr - b_arr
    mean_diff = float(diff.mean())
    sd = float(diff.std(ddof=1))
    if sd <= 1e-12 * max(1.0, abs(mean_diff)):
        raise DegenerateDataError("degenerate pairs", "differences have zero variance")

    t = mean_diff / (sd / math.sqrt(n))
    df = n - 1
    return TTestResult(t=t, p=t_two_tailed_p(t, df), df=df, mean_diff=mean_diff)


def group_means_ttests(table: GroupMeansTable) -> Dict[str, TTestResult]:
    """
    The three paired method comparisons across department rows

    Only rows with all three means present take part. Comparisons that cannot
    be computed are left out with a warning.

    Returns:
        Mapping of comparison name ("Exam-Coursework", "Coursework-Both",
        "Exam-Both") to TTestResult
    """
    complete = [
        row
        for row in table.rows
        if row.exam is not None and row.coursework is not None and row.both is not None
    ]
    results: Dict[str, TTestResult] = {}
    if len(complete) < 2:
        logger.warning("Too few complete department rows for t-tests", rows=len(complete))
        return results

    for name, first, second in _PAIRS:
        try:
            results[name] = paired_ttest(
                [row.mean(first) for row in complete],
                [row.mean(second) for row in complete],
            )
        except DegenerateDataError as e:
            logger.warning("Skipping t-test", comparison=name, reason=str(e))
    return results


def published_ttests() -> Dict[str, TTestResult]:
    """Paired t-tests on the built-in department means"""
    return group_means_ttests(PUBLISHED_MEANS)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Sample Pearson correlation coefficient

    Raises:
        DegenerateDataError: Length mismatch, fewer than 2 values, or a
            constant input ("zero variance")
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if x_arr.shape != y_arr.shape:
        raise DegenerateDataError("length mismatch", f"{x_arr.size} vs {y_arr.size}")
    if x_arr.size < 2:
        raise DegenerateDataError("zero variance", "need >= 2 values")

    if np.all(x_arr == x_arr[0]) or np.all(y_arr == y_arr[0]):
        raise DegenerateDataError("zero variance")

    dx = x_arr - x_arr.mean()
    dy = y_arr - y_arr.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


DEFAULT_FACTORS = (
    "exam_weighting",
    "cswk_weighting",
    "cswk_mark",
    "exam_mark",
    "module_mark",
)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Lower-triangular Pearson matrix (diagonal included); None = undefined"""

    factors: Tuple[str, ...]
    cells: Tuple[Tuple[Optional[float], ...], ...]

    def get(self, row: str, column: str) -> Optional[float]:
        i, j = self.factors.index(row), self.factors.index(column)
        if j > i:
            i, j = j, i
        return self.cells[i][j]


def correlation_matrix(
    records: List[TranscriptRecord], factors: Sequence[str] = DEFAULT_FACTORS
) -> CorrelationMatrix:
    """
    Pairwise Pearson correlation over complete cases

    Args:
        records: Records to correlate
        factors: Numeric record field names

    Returns:
        CorrelationMatrix; degenerate pairs are None cells
    """
    factors = tuple(factors)
    columns = {
        name: [getattr(r, name) for r in records] for name in set(factors)
    }

    cells = []
    for i, row_name in enumerate(factors):
        row = []
        for column_name in factors[: i + 1]:
            pairs = [
                (a, b)
                for a, b in zip(columns[row_name], columns[column_name])
                if a is not None and b is not None
            ]
            try:
                value = pearson([p[0] for p in pairs], [p[1] for p in pairs])
            except DegenerateDataError as e:
                logger.debug(
                    "Undefined correlation cell", row=row_name, column=column_name, reason=str(e)
                )
                value = None
            row.append(value)
        cells.append(tuple(row))
    return CorrelationMatrix(factors=factors, cells=tuple(cells))


def rank_factors(matrix: CorrelationMatrix, target: str = "module_mark") -> List[Tuple[str, float]]:
    """
    Factors ordered by absolute correlation with a target

    Returns:
        List of (factor, r) pairs, strongest first, undefined cells left out
    """
    ranked = []
    for factor in matrix.factors:
        if factor == target:
            continue
        value = matrix.get(target, factor)
        if value is not None:
            ranked.append((factor, value))
    return sorted(ranked, key=lambda item: -abs(item[1]))


def fit_poly(x: Sequence[float], y: Sequence[float], degree: int = 2) -> QuadFit:
    """
    Ordinary least-squares polynomial fit of degree 1 or 2

    Args:
        x: Predictor values
        y: Response values

    Returns:
        QuadFit with R-squared = 1 - SSE/SST

    Raises:
        DegenerateDataError: Too few points or distinct x values
            ("degenerate design"), or constant y ("zero variance response")
    """
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree}")
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if x_arr.shape != y_arr.shape:
        raise DegenerateDataError("length mismatch", f"{x_arr.size} vs {y_arr.size}")
    if x_arr.size < degree + 2 or np.unique(x_arr).size < degree + 1:
        raise DegenerateDataError(
            "degenerate design",
            f"{x_arr.size} points, {np.unique(x_arr).size} distinct x values",
        )

    sst = float(np.sum((y_arr - y_arr.mean()) ** 2))
    if sst == 0.0:
        raise DegenerateDataError("zero variance response")

    design = np.vander(x_arr, degree + 1, increasing=True)
    beta, _, rank, _ = np.linalg.lstsq(design, y_arr, rcond=None)
    if rank < degree + 1:
        raise DegenerateDataError("degenerate design", f"rank {rank}")

    residuals = y_arr - design @ beta
    sse = float(np.dot(residuals, residuals))
    return QuadFit(
        beta0=float(beta[0]),
        beta1=float(beta[1]),
        beta2=float(beta[2]) if degree == 2 else 0.0,
        r_squared=1.0 - sse / sst,
        degree=degree,
    )


@dataclass(frozen=True)
class ModelComparison:
    """Linear versus quadratic fit of the same data"""

    linear: QuadFit
    quadratic: QuadFit

    @property
    def preferred_degree(self) -> int:
        return 2 if self.quadratic.r_squared > self.linear.r_squared else 1

    @property
    def r_squared_gain(self) -> float:
        return self.quadratic.r_squared - self.linear.r_squared


def compare_models(x: Sequence[float], y: Sequence[float]) -> ModelComparison:
    """Fit degree 1 and degree 2 and report both"""
    comparison = ModelComparison(linear=fit_poly(x, y, 1), quadratic=fit_poly(x, y, 2))
    logger.info(
        "Compared regression models",
        r_squared_linear=comparison.linear.r_squared,
        r_squared_quadratic=comparison.quadratic.r_squared,
        preferred_degree=comparison.preferred_degree,
    )
    return comparison


def fit_refine_coeffs(records: List[RefinedRecord]) -> Tuple[RefineCoeffs, QuadFit]:
    """
    Fit refinement coefficients from (MAI, module mark) pairs

    Flagged records are left out. The intercept is discarded since the
    refinement adds the fitted curve's MAI terms to the current mark.

    Returns:
        Tuple of (RefineCoeffs, underlying quadratic fit)
    """
    usable = [r for r in records if r.flag is None and r.module_mark is not None]
    if not usable:
        raise NoRecordsError("fit_refine_coeffs")
    fit = fit_poly([r.mai for r in usable], [r.module_mark for r in usable], degree=2)
    return RefineCoeffs(beta1=fit.beta1, beta2=fit.beta2), fit
