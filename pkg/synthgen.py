"""
Synthetic Transcript Generator

Deterministic transcripts calibrated to the published per-department means,
so the whole pipeline and the MAI-effect experiment run without real data.

Each department draws from its own seed stream; inside a department the
module structure, the marks and the injected missingness come from three
independent streams, so changing a missingness rate only changes which
fields are blank.
"""

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from mai import ClassTable, UnknownRatioClassError, class_table, record_mai
from observability import get_logger
from stats import PUBLISHED_MEANS
from transcript_model import (
    AssessmentMethod,
    Department,
    MarkPipelineError,
    TranscriptRecord,
)

logger = get_logger("synthgen")

YEARS_OF_STUDY = (1, 2)
PROGRAMS_PER_DEPARTMENT = 3
# Catalogue size per year as a multiple of the modules each student takes
CATALOGUE_FACTOR = 3
SUBMARK_SPREAD_SD = 6.0


class SynthConfigError(MarkPipelineError):
    """Raised for an invalid generator configuration"""

    pass


def _published_means(department: Department) -> Dict[str, float]:
    row = PUBLISHED_MEANS.row(department)
    return {"exam": row.exam, "coursework": row.coursework, "both": row.both}


@dataclass
class DepartmentSynthConfig:
    """Generation settings of one department"""

    students: int = 200
    means: Optional[Dict[str, float]] = None
    mark_sd: Optional[float] = None
    class_weights: Optional[List[float]] = None

    def mean_for(self, method: AssessmentMethod) -> float:
        key = {
            AssessmentMethod.EXAM: "exam",
            AssessmentMethod.COURSEWORK: "coursework",
            AssessmentMethod.BOTH: "both",
        }[method]
        return self.means[key]


@dataclass
class SynthConfig:
    """
    Generator configuration

    Departments missing a setting take the global one (mark_sd) or the
    published defaults (means); class weights default to uniform over the
    department's ratio classes. ``class_tables`` replaces the built-in
    tables of the departments it names and is not part of the YAML form.
    """

    departments: Dict[Department, DepartmentSynthConfig] = field(
        default_factory=lambda: {Department.CS: DepartmentSynthConfig()}
    )
    seed: int = 0
    missing_method_rate: float = 0.0
    markless_rate: float = 0.0
    mai_outcome_coupling: float = 0.0
    modules_per_student_per_year: int = 8
    mark_sd: float = 12.0
    ability_share: float = 0.5
    class_tables: Dict[Department, ClassTable] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for name in ("missing_method_rate", "markless_rate", "ability_share"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SynthConfigError(f"{name} must be in [0, 1], got {value}")
        if not self.mark_sd > 0:
            raise SynthConfigError(f"mark_sd must be > 0, got {self.mark_sd}")
        if self.modules_per_student_per_year < 1:
            raise SynthConfigError(
                f"modules_per_student_per_year must be >= 1, got {self.modules_per_student_per_year}"
            )
        if not math.isfinite(self.mai_outcome_coupling):
            raise SynthConfigError("mai_outcome_coupling must be finite")
        if not self.departments:
            raise SynthConfigError("at least one department is required")

        for dept, dept_config in self.departments.items():
            self._complete(dept, dept_config)

    def table_for(self, dept: Department) -> ClassTable:
        return self.class_tables.get(dept) or class_table(dept)

    def _complete(self, dept: Department, dept_config: DepartmentSynthConfig):
        if dept_config.students < 1:
            raise SynthConfigError(f"{dept.value}: students must be >= 1")

        means = _published_means(dept)
        unknown = set(dept_config.means or {}) - set(means)
        if unknown:
            raise SynthConfigError(f"{dept.value}: unknown mean keys {sorted(unknown)}")
        means.update(dept_config.means or {})
        for key, value in means.items():
            if not 0.0 <= value <= 100.0:
                raise SynthConfigError(f"{dept.value}: {key} mean {value} outside [0, 100]")
        dept_config.means = means

        if dept_config.mark_sd is None:
            dept_config.mark_sd = self.mark_sd
        if not dept_config.mark_sd > 0:
            raise SynthConfigError(f"{dept.value}: mark_sd must be > 0")

        n_classes = len(self.table_for(dept))
        if dept_config.class_weights is None:
            dept_config.class_weights = [1.0] * n_classes
        weights = dept_config.class_weights
        if len(weights) != n_classes or any(w < 0 for w in weights) or sum(weights) <= 0:
            raise SynthConfigError(
                f"{dept.value}: class_weights needs {n_classes} non-negative values "
                f"with a positive sum"
            )


_GLOBAL_KEYS = {
    "seed",
    "missing_method_rate",
    "markless_rate",
    "mai_outcome_coupling",
    "modules_per_student_per_year",
    "mark_sd",
    "ability_share",
    "departments",
}
_DEPARTMENT_KEYS = {"students", "means", "mark_sd", "class_weights"}


def synth_config_from_dict(
    data: Mapping, class_tables: Optional[Mapping[Department, ClassTable]] = None
) -> SynthConfig:
    """Build a SynthConfig from parsed YAML"""
    unknown = set(data) - _GLOBAL_KEYS
    if unknown:
        raise SynthConfigError(f"unknown config keys: {sorted(unknown)}")

    departments = {}
    for name, settings in (data.get("departments") or {}).items():
        try:
            dept = Department.parse(str(name))
        except ValueError as e:
            raise SynthConfigError(str(e))
        settings = settings or {}
        bad = set(settings) - _DEPARTMENT_KEYS
        if bad:
            raise SynthConfigError(f"{dept.value}: unknown keys {sorted(bad)}")
        departments[dept] = DepartmentSynthConfig(**settings)

    options = {k: v for k, v in data.items() if k != "departments"}
    if departments:
        options["departments"] = departments
    try:
        return SynthConfig(**options, class_tables=dict(class_tables or {}))
    except TypeError as e:
        raise SynthConfigError(f"invalid config: {e}")


def load_synth_config(
    path: Union[str, Path], class_tables: Optional[Mapping[Department, ClassTable]] = None
) -> SynthConfig:
    """
    Load a generator config from YAML

    Args:
        path: YAML file
        class_tables: Class table overrides the config is validated against

    Raises:
        SynthConfigError: Unreadable file, unknown keys or invalid values
    """
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as e:
        raise SynthConfigError(f"cannot read config {path}: {e}")
    if not isinstance(data, dict):
        raise SynthConfigError(f"config {path} must be a mapping")
    return synth_config_from_dict(data, class_tables)


def write_synth_config(config: SynthConfig, path: Union[str, Path]):
    """Write a config as YAML that load_synth_config reads back"""
    data = {
        k: v for k, v in asdict(config).items() if k not in ("departments", "class_tables")
    }
    data["departments"] = {
        dept.value: asdict(dept_config) for dept, dept_config in config.departments.items()
    }
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))


@dataclass
class SynthReport:
    """What a generation run produced"""

    records: int = 0
    marks_generated: int = 0
    clamped_marks: int = 0
    methods_blanked: int = 0
    markless_records: int = 0
    students_shifted: int = 0
    mean_abs_shift: float = 0.0
    max_abs_shift: float = 0.0

    @property
    def clamped_fraction(self) -> float:
        if self.marks_generated == 0:
            return 0.0
        return self.clamped_marks / self.marks_generated


def method_for_ratio(exam_weighting: int) -> AssessmentMethod:
    if exam_weighting == 100:
        return AssessmentMethod.EXAM
    if exam_weighting == 0:
        return AssessmentMethod.COURSEWORK
    return AssessmentMethod.BOTH


def _clamp(value: float) -> Tuple[float, bool]:
    clamped = min(100.0, max(0.0, value))
    return clamped, clamped != value


class TranscriptSynthesizer:
    """
    Generates transcripts for every configured department

    Usage:
        synth = TranscriptSynthesizer(config)
        records = synth.generate()
        synth.report.clamped_fraction
    """

    def __init__(self, config: SynthConfig):
        self.config = config
        self.report = SynthReport()

    def generate(self) -> List[TranscriptRecord]:
        self.report = SynthReport()
        records: List[TranscriptRecord] = []
        # Department order is fixed by the enum, not the config mapping
        for dept in Department:
            if dept in self.config.departments:
                records.extend(self._department(dept, self.config.departments[dept]))

        if self.config.mai_outcome_coupling != 0.0:
            records = plant_mai_signal(
                records,
                self.config.mai_outcome_coupling,
                tables=self.config.class_tables,
                report=self.report,
            )

        self.report.records = len(records)
        logger.info(
            "Generated transcripts",
            records=self.report.records,
            clamped=self.report.clamped_marks,
            methods_blanked=self.report.methods_blanked,
            markless=self.report.markless_records,
        )
        return records

    def _streams(self, dept: Department) -> Tuple[np.random.Generator, ...]:
        dept_index = list(Department).index(dept)
        root = np.random.SeedSequence([self.config.seed, dept_index])
        return tuple(np.random.default_rng(s) for s in root.spawn(3))

    def _catalogue(
        self, dept: Department, table: ClassTable, weights: Sequence[float], rng
    ) -> Dict[int, List[Tuple[str, Tuple[int, int]]]]:
        probs = np.asarray(weights, dtype=float) / sum(weights)
        # Every class with a positive weight is offered at least once a year
        required = [k for k, w in enumerate(weights) if w > 0]
        size = max(self.config.modules_per_student_per_year * CATALOGUE_FACTOR, len(required))
        catalogue = {}
        for year in YEARS_OF_STUDY:
            extra = rng.choice(len(table), size=size - len(required), p=probs)
            ranks = rng.permutation(np.concatenate([required, extra]).astype(int))
            catalogue[year] = [
                (f"{dept.value.upper()}{year}{j:03d}", table.ratio_for(int(rank)))
                for j, rank in enumerate(ranks)
            ]
        return catalogue

    def _department(
        self, dept: Department, dept_config: DepartmentSynthConfig
    ) -> List[TranscriptRecord]:
        cfg = self.config
        structure_rng, mark_rng, missing_rng = self._streams(dept)
        table = self.config.table_for(dept)
        catalogue = self._catalogue(dept, table, dept_config.class_weights, structure_rng)

        ability_sd = dept_config.mark_sd * math.sqrt(cfg.ability_share)
        noise_sd = dept_config.mark_sd * math.sqrt(1.0 - cfg.ability_share)
        per_year = cfg.modules_per_student_per_year

        records = []
        for i in range(dept_config.students):
            regno = f"{dept.value}{i:05d}"
            program = f"{dept.value.upper()}-P{int(structure_rng.integers(1, PROGRAMS_PER_DEPARTMENT + 1))}"
            ability = mark_rng.normal(0.0, ability_sd)

            for year in YEARS_OF_STUDY:
                picks = structure_rng.choice(len(catalogue[year]), size=per_year, replace=False)
                for pick in sorted(picks):
                    module_code, (exw, cww) = catalogue[year][pick]
                    method = method_for_ratio(exw)
                    record = self._record(
                        regno, module_code, program, dept, year, exw, cww, method,
                        dept_config.mean_for(method) + ability, noise_sd, mark_rng,
                    )
                    records.append(self._inject_missing(record, missing_rng))
        return records

    def _record(
        self, regno, module_code, program, dept, year, exw, cww, method, mean, noise_sd, rng
    ) -> TranscriptRecord:
        raw = mean + rng.normal(0.0, noise_sd)
        spread = rng.normal(0.0, SUBMARK_SPREAD_SD)
        module_mark, clamped = _clamp(raw)
        module_mark = round(module_mark, 1)
        self.report.marks_generated += 1
        self.report.clamped_marks += int(clamped)

        exam_mark = cswk_mark = None
        if method is AssessmentMethod.EXAM:
            exam_mark = module_mark
        elif method is AssessmentMethod.COURSEWORK:
            cswk_mark = module_mark
        else:
            # (exw * exam + cww * cswk) / 100 == module_mark before clamping
            exam_mark, c1 = _clamp(module_mark - spread * cww / 100.0)
            cswk_mark, c2 = _clamp(module_mark + spread * exw / 100.0)
            exam_mark, cswk_mark = round(exam_mark, 2), round(cswk_mark, 2)
            self.report.clamped_marks += int(c1 or c2)

        return TranscriptRecord(
            regno=regno,
            module_code=module_code,
            program_code=program,
            department=dept,
            module_mark=module_mark,
            exam_mark=exam_mark,
            cswk_mark=cswk_mark,
            exam_weighting=exw,
            cswk_weighting=cww,
            assessment_method=method,
            year_of_study=year,
        )

    def _inject_missing(self, record: TranscriptRecord, rng) -> TranscriptRecord:
        # Two draws per record whatever the rates
        blank_method, markless = rng.random(2)
        changes = {}
        if blank_method < self.config.missing_method_rate:
            changes["assessment_method"] = None
            self.report.methods_blanked += 1
        if markless < self.config.markless_rate:
            changes.update(module_mark=None, exam_mark=None, cswk_mark=None)
            self.report.markless_records += 1
        return record.with_changes(**changes) if changes else record


def generate(config: SynthConfig) -> List[TranscriptRecord]:
    """
    Generate transcripts for a config

    Deterministic given the config (including its seed).
    """
    return TranscriptSynthesizer(config).generate()


def _shift(value: Optional[float], amount: float, digits: int) -> Optional[float]:
    if value is None:
        return None
    return round(min(100.0, max(0.0, value + amount)), digits)


def plant_mai_signal(
    records: List[TranscriptRecord],
    coupling: float,
    tables: Optional[Mapping[Department, ClassTable]] = None,
    report: Optional[SynthReport] = None,
) -> List[TranscriptRecord]:
    """
    Shift year-2 marks by each student's year-1 MAI deviation

    shift = coupling * (student's year-1 average MAI - department cohort mean
    of those averages). Marks and sub-marks move together and are clamped to
    [0, 100]. Year-1 records without weightings, or whose ratio is not a
    class of the department table, do not count towards the average.

    Args:
        records: Records spanning years 1 and 2
        coupling: Signal strength (0 returns the input unchanged)
        tables: Class tables per department (built-ins by default)

    Returns:
        New record list in input order
    """
    if coupling == 0.0:
        return list(records)

    year1: Dict[str, List[int]] = {}
    departments: Dict[str, Department] = {}
    for record in records:
        if record.year_of_study != 1 or record.resolved_weightings() is None:
            continue
        table = (tables or {}).get(record.department) or class_table(record.department)
        try:
            index = record_mai(record, table)
        except UnknownRatioClassError:
            continue
        year1.setdefault(record.regno, []).append(index)
        departments[record.regno] = record.department

    averages = {regno: float(np.mean(mais)) for regno, mais in year1.items()}
    cohort: Dict[Department, List[float]] = {}
    for regno, avg in averages.items():
        cohort.setdefault(departments[regno], []).append(avg)
    cohort_mean = {dept: float(np.mean(values)) for dept, values in cohort.items()}

    shifts = {
        regno: coupling * (avg - cohort_mean[departments[regno]])
        for regno, avg in averages.items()
    }

    shifted = []
    for record in records:
        amount = shifts.get(record.regno)
        if record.year_of_study != 2 or amount is None:
            shifted.append(record)
            continue
        shifted.append(
            record.with_changes(
                module_mark=_shift(record.module_mark, amount, 1),
                exam_mark=_shift(record.exam_mark, amount, 2),
                cswk_mark=_shift(record.cswk_mark, amount, 2),
            )
        )

    if report is not None and shifts:
        magnitudes = [abs(s) for s in shifts.values()]
        report.students_shifted = sum(1 for m in magnitudes if m > 0)
        report.mean_abs_shift = float(np.mean(magnitudes))
        report.max_abs_shift = float(max(magnitudes))
    logger.info("Planted MAI signal", coupling=coupling, students=len(shifts))
    return shifted
