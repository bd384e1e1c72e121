"""
Tests for stats module
"""

import math

import numpy as np
import pytest
from scipy import integrate

from refine import refine_all
from stats import (
    DEFAULT_FACTORS,
    PUBLISHED_MEANS,
    DegenerateDataError,
    GroupMeansRow,
    GroupMeansTable,
    compare_models,
    correlation_matrix,
    fit_poly,
    fit_refine_coeffs,
    group_means,
    group_means_ttests,
    paired_ttest,
    pearson,
    rank_factors,
    t_two_tailed_p,
    published_ttests,
)
from synthgen import DepartmentSynthConfig, SynthConfig, generate
from transcript_model import AssessmentMethod, Department, TranscriptRecord


def t_density(x: float, df: int) -> float:
    log_norm = (
        math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    )
    return math.exp(log_norm - (df + 1) / 2 * math.log1p(x * x / df))


def oracle_p(t: float, df: int) -> float:
    tail, _ = integrate.quad(t_density, abs(t), np.inf, args=(df,), epsabs=1e-12)
    return 2.0 * tail


def record(exw, mark, exam=None, cswk=None, method=None, regno="S", dept=Department.CS):
    return TranscriptRecord(
        regno=regno,
        module_code="M",
        program_code="P",
        department=dept,
        module_mark=mark,
        exam_mark=exam,
        cswk_mark=cswk,
        exam_weighting=exw,
        cswk_weighting=100 - exw,
        assessment_method=method,
    )


class TestPairedTTest:
    """Test paired t-tests"""

    def test_department_means_exam_vs_coursework(self):
        """Test the exam/coursework comparison on the published means"""
        result = published_ttests()["Exam-Coursework"]

        assert result.t == pytest.approx(-5.83, abs=0.01)
        assert 0.001 <= result.p <= 0.003
        assert result.df == 5
        assert result.mean_diff == pytest.approx(-4.3033, abs=1e-4)

    def test_department_means_other_pairs(self):
        """Test coursework/mixed and exam/mixed"""
        results = published_ttests()
        assert results["Coursework-Both"].p == pytest.approx(0.004, abs=0.001)
        assert results["Exam-Both"].p == pytest.approx(0.749, abs=0.005)

    def test_symmetry(self):
        """Test swapping samples negates t and keeps p"""
        a, b = [1.0, 2.5, 3.1, 4.8], [0.5, 2.0, 3.6, 3.9]
        forward, backward = paired_ttest(a, b), paired_ttest(b, a)
        assert backward.t == pytest.approx(-forward.t)
        assert backward.p == pytest.approx(forward.p)

    def test_constant_shift_is_degenerate(self):
        """Test zero-variance differences"""
        b = [0.1, 0.7, 2.3, 5.9]
        with pytest.raises(DegenerateDataError, match="degenerate pairs"):
            paired_ttest([x + 1.0 for x in b], b)

    def test_single_pair(self):
        """Test fewer than two pairs"""
        with pytest.raises(DegenerateDataError):
            paired_ttest([1.0], [2.0])

    def test_length_mismatch(self):
        """Test unpaired samples"""
        with pytest.raises(DegenerateDataError, match="length mismatch"):
            paired_ttest([1.0, 2.0], [1.0])


class TestTwoTailedP:
    """Test the t-distribution tail"""

    def test_zero_t(self):
        """Test t = 0 gives p = 1"""
        assert t_two_tailed_p(0.0, 7) == pytest.approx(1.0)

    def test_known_value(self):
        """Test a tabulated critical value"""
        assert t_two_tailed_p(2.571, 5) == pytest.approx(0.05, abs=1e-4)

    @pytest.mark.parametrize("df", [1, 2, 3, 5, 8, 13, 21, 30])
    def test_matches_numeric_integration(self, df):
        """Test agreement with direct integration of the density"""
        for t in np.linspace(-10.0, 10.0, 21):
            assert t_two_tailed_p(t, df) == pytest.approx(oracle_p(t, df), abs=1e-4)

    def test_monotone_in_t(self):
        """Test larger |t| never increases p"""
        ps = [t_two_tailed_p(t, 4) for t in np.linspace(0.0, 10.0, 50)]
        assert all(b <= a for a, b in zip(ps, ps[1:]))

    def test_invalid_df(self):
        """Test df must be positive"""
        with pytest.raises(ValueError):
            t_two_tailed_p(1.0, 0)


class TestGroupMeans:
    """Test group means and derived t-tests"""

    def test_means_per_department_and_method(self):
        """Test averaging by department and method"""
        records = [
            record(100, 50.0, method=AssessmentMethod.EXAM, regno="A"),
            record(100, 70.0, method=AssessmentMethod.EXAM, regno="B"),
            record(0, 65.0, method=AssessmentMethod.COURSEWORK, regno="A"),
            record(50, 40.0, method=AssessmentMethod.BOTH, regno="C", dept=Department.MATH),
            record(50, 40.0, method=None, regno="D"),
        ]
        table = group_means(records)

        cs = table.row(Department.CS)
        assert cs.exam == pytest.approx(60.0)
        assert cs.coursework == pytest.approx(65.0)
        assert cs.both is None
        assert cs.student_count == 2
        assert table.row(Department.MATH).both == pytest.approx(40.0)
        assert table.row(Department.BUSINESS) is None

    def test_generator_calibration(self):
        """Test generated CS means land near their configured values"""
        config = SynthConfig(
            departments={Department.CS: DepartmentSynthConfig(students=500)}, seed=11
        )
        records = generate(config)
        row = group_means(records).row(Department.CS)

        for method, target in (
            (AssessmentMethod.EXAM, 58.18),
            (AssessmentMethod.COURSEWORK, 64.40),
            (AssessmentMethod.BOTH, 58.87),
        ):
            n = sum(1 for r in records if r.assessment_method is method)
            assert abs(row.mean(method) - target) <= 3 * 12 / math.sqrt(n)

    def test_ttests_need_two_complete_rows(self):
        """Test too few rows give no t-tests"""
        table = GroupMeansTable(rows=(PUBLISHED_MEANS.rows[0],))
        assert group_means_ttests(table) == {}

    def test_ttests_skip_incomplete_rows(self):
        """Test rows missing a method are left out"""
        rows = PUBLISHED_MEANS.rows + (GroupMeansRow(Department.CS, 1, 50.0, None, 50.0),)
        results = group_means_ttests(GroupMeansTable(rows=rows))
        assert results["Exam-Coursework"].df == 5


class TestCorrelation:
    """Test Pearson correlation"""

    def test_perfect(self):
        """Test linear relations"""
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_bounded_and_symmetric(self):
        """Test r is symmetric and within [-1, 1]"""
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=40), rng.normal(size=40)
        assert pearson(x, y) == pytest.approx(pearson(y, x))
        assert -1.0 <= pearson(x, y) <= 1.0

    def test_constant_input(self):
        """Test zero variance"""
        with pytest.raises(DegenerateDataError, match="zero variance"):
            pearson([1, 1, 1], [1, 2, 3])

    def test_constant_non_integer_input(self):
        """Test a constant column whose mean is not exact is still degenerate"""
        with pytest.raises(DegenerateDataError, match="zero variance"):
            pearson([0.1] * 3, [1, 2, 3])
        with pytest.raises(DegenerateDataError, match="zero variance"):
            pearson([1, 2, 3], [0.1] * 3)

    def test_affine_invariance(self):
        """Test positive affine maps keep r and negative scaling flips its sign"""
        rng = np.random.default_rng(11)
        x, y = rng.normal(size=50), rng.normal(size=50)
        r = pearson(x, y)

        assert pearson(3.0 * x + 7.0, y) == pytest.approx(r, abs=1e-12)
        assert pearson(x, 0.5 * y - 2.0) == pytest.approx(r, abs=1e-12)
        assert pearson(-2.0 * x, y) == pytest.approx(-r, abs=1e-12)
        assert pearson(-x, -y) == pytest.approx(r, abs=1e-12)

    def test_weightings_forced_negative(self):
        """Test complementary weightings correlate at exactly -1"""
        records = [record(exw, 50.0) for exw in (100, 90, 75, 60, 50, 35, 0, 70, 45)]
        matrix = correlation_matrix(records)
        assert matrix.get("exam_weighting", "cswk_weighting") == pytest.approx(-1.0, abs=1e-12)

    def test_matrix_shape_and_diagonal(self):
        """Test the lower-triangular layout"""
        records = [
            record(exw, 40.0 + i, exam=30.0 + 2 * i, cswk=60.0 - i)
            for i, exw in enumerate((100, 80, 60, 50, 30, 0))
        ]
        matrix = correlation_matrix(records)

        assert matrix.factors == DEFAULT_FACTORS
        assert [len(row) for row in matrix.cells] == [1, 2, 3, 4, 5]
        assert all(matrix.get(f, f) == pytest.approx(1.0) for f in DEFAULT_FACTORS)
        assert matrix.get("module_mark", "exam_mark") == matrix.get("exam_mark", "module_mark")

    def test_undefined_cells(self):
        """Test constant factors leave None cells"""
        records = [record(exw, 50.0) for exw in (100, 50, 0)]
        matrix = correlation_matrix(records)
        assert matrix.get("module_mark", "exam_weighting") is None
        assert matrix.get("exam_mark", "exam_mark") is None

    def test_rank_factors(self):
        """Test factors ordered by absolute correlation with the mark"""
        records = [
            record(exw, 40.0 + i, exam=30.0 + 2 * i, cswk=50.0 + (i % 2))
            for i, exw in enumerate((100, 80, 60, 50, 30, 0))
        ]
        ranked = rank_factors(correlation_matrix(records))
        assert ranked[0][0] == "exam_mark"
        assert all(abs(a[1]) >= abs(b[1]) for a, b in zip(ranked, ranked[1:]))


class TestRegression:
    """Test polynomial fits"""

    def test_recovers_refinement_curve(self):
        """Test noise-free quadratic data is fitted exactly"""
        x = np.arange(12, dtype=float)
        y = 52.0 + 0.0035 * x - 0.05688 * x**2
        fit = fit_poly(x, y, 2)

        assert fit.beta0 == pytest.approx(52.0, abs=1e-9)
        assert fit.beta1 == pytest.approx(0.0035, abs=1e-9)
        assert fit.beta2 == pytest.approx(-0.05688, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0)

    def test_linear_data(self):
        """Test a line gives a zero quadratic term"""
        x = np.arange(10, dtype=float)
        fit = fit_poly(x, 2 * x + 1, 2)
        assert fit.beta2 == pytest.approx(0.0, abs=1e-9)
        assert fit.beta1 == pytest.approx(2.0)

    def test_residuals_orthogonal_to_design(self):
        """Test least-squares normal equations hold"""
        rng = np.random.default_rng(9)
        x = rng.integers(0, 12, size=200).astype(float)
        y = 60 - 0.05 * x**2 + rng.normal(0, 10, size=200)
        fit = fit_poly(x, y, 2)

        residuals = y - np.array([fit.predict(v) for v in x])
        for column in (np.ones_like(x), x, x**2):
            assert abs(np.dot(residuals, column)) < 1e-8 * len(x) * 1000

    def test_quadratic_never_worse(self):
        """Test R-squared of degree 2 is at least degree 1"""
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = rng.integers(0, 12, size=80).astype(float)
            y = rng.normal(55, 12, size=80)
            comparison = compare_models(x, y)
            assert comparison.quadratic.r_squared >= comparison.linear.r_squared - 1e-12
            assert comparison.r_squared_gain >= -1e-12

    def test_degenerate_design(self):
        """Test too few distinct x values"""
        with pytest.raises(DegenerateDataError, match="degenerate design"):
            fit_poly([1.0, 1.0, 2.0, 2.0], [3.0, 4.0, 5.0, 6.0], 2)

    def test_constant_response(self):
        """Test y without variance"""
        with pytest.raises(DegenerateDataError, match="zero variance response"):
            fit_poly([0.0, 1.0, 2.0, 3.0], [5.0] * 4, 2)

    def test_fit_refine_coeffs(self):
        """Test coefficients fitted from refined records"""
        ratios = [(100, 0), (70, 30), (60, 40), (50, 50), (0, 100)]
        mais = [0, 4, 5, 6, 11]
        records = []
        for (exw, _), mai in zip(ratios, mais):
            mark = 60.0 + 0.0035 * mai - 0.05688 * mai * mai
            for i in range(3):
                records.append(record(exw, mark, regno=f"S{mai}{i}"))

        coeffs, fit = fit_refine_coeffs(refine_all(records))
        assert coeffs.beta1 == pytest.approx(0.0035, abs=1e-9)
        assert coeffs.beta2 == pytest.approx(-0.05688, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0)
