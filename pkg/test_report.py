"""
Tests for report module
"""

import io
import json

import numpy as np
import pytest

from classify import LabeledDataset, compare_classifiers, evaluate
from cleanse import CleanseReport
from ingest import parse_refined, parse_transcripts
from refine import refine_all, summarize_refinement
from report import (
    RunManifest,
    manifest_path,
    render,
    write_manifest,
    write_refined,
    write_transcripts,
)
from stats import PUBLISHED_MEANS, compare_models, correlation_matrix, published_ttests
from transcript_model import AssessmentMethod, Department, MarkClass, TranscriptRecord


def sample_records():
    return [
        TranscriptRecord("S1", "CS101", "G400", Department.CS, module_mark=60.3,
                         cswk_mark=60.3, exam_weighting=0, cswk_weighting=100,
                         assessment_method=AssessmentMethod.COURSEWORK, year_of_study=1),
        TranscriptRecord("S1", "MA101", "G400", Department.MATH, module_mark=48.6,
                         exam_mark=48.6, exam_weighting=100, cswk_weighting=0,
                         assessment_method=AssessmentMethod.EXAM, year_of_study=2),
        TranscriptRecord("S2", "CS102", "", Department.CS, module_mark=None),
    ]


class TestRecordWriters:
    """Test CSV writers"""

    def test_transcripts_read_back(self):
        """Test written transcripts parse to the same records"""
        buffer = io.StringIO()
        write_transcripts(sample_records(), buffer)

        records, report = parse_transcripts(io.StringIO(buffer.getvalue()), Department.BUSINESS)
        assert records == sample_records()
        assert report.ignored_columns == []

    def test_blank_cells_for_missing(self):
        """Test None values are written as empty cells"""
        buffer = io.StringIO()
        write_transcripts(sample_records()[2:], buffer)
        row = buffer.getvalue().splitlines()[1]
        assert row == "S2,CS102,,,,,,,,1,CS"

    def test_refined_read_back(self):
        """Test refined records survive a write/read cycle"""
        refined = refine_all(sample_records()[:2])
        buffer = io.StringIO()
        write_refined(refined, buffer)

        records, _ = parse_refined(io.StringIO(buffer.getvalue()), Department.CS)
        assert records == refined

    def test_writes_file(self, tmp_path):
        """Test writing to a path"""
        path = tmp_path / "out.csv"
        write_transcripts(sample_records(), path)
        assert path.read_text().startswith("regno,module_code,program_code")


class TestManifest:
    """Test run manifests"""

    def test_path(self, tmp_path):
        """Test the manifest sits next to its output"""
        assert manifest_path(tmp_path / "refined.csv").name == "refined.csv.manifest.json"

    def test_written_json(self, tmp_path):
        """Test manifest content"""
        manifest = RunManifest(subcommand="refine", inputs=["in.csv"], seed=3)
        manifest.finish({"refine": {"records": 4}})
        path = write_manifest(manifest, tmp_path / "refined.csv")

        data = json.loads(path.read_text())
        assert data["subcommand"] == "refine"
        assert data["counts"] == {"refine": {"records": 4}}
        assert data["finished_at"] is not None


class TestRender:
    """Test report rendering"""

    def test_ttests_json(self):
        """Test t-test results as JSON"""
        data = json.loads(render(published_ttests(), "json"))
        first = data["tests"][0]
        assert first["comparison"] == "Exam-Coursework"
        assert first["t"] == pytest.approx(-5.83, abs=0.01)
        assert first["df"] == 5

    def test_ttests_table(self):
        """Test the aligned table form"""
        text = render(published_ttests(), "table")
        assert text.splitlines()[0] == "Paired t-tests"
        assert "Exam-Coursework" in text

    def test_group_means_csv(self):
        """Test group means as CSV"""
        lines = render(PUBLISHED_MEANS, "csv").splitlines()
        assert lines[0] == "department,students,exam,coursework,both"
        assert lines[3] == "CS,19800,58.18,64.4,58.87"

    def test_summary(self):
        """Test refinement summary rows"""
        summary = summarize_refinement(refine_all(sample_records()[:2]))
        data = json.loads(render(summary, "json"))
        assert [row["group"] for row in data["rows"]] == ["Exam", "Coursework", "Total"]

    def test_correlation_table(self):
        """Test undefined cells render blank"""
        records = [
            TranscriptRecord("S", "M", "P", Department.CS, module_mark=40.0 + i,
                             exam_weighting=w, cswk_weighting=100 - w)
            for i, w in enumerate((100, 50, 0, 70))
        ]
        data = json.loads(render(correlation_matrix(records), "json"))
        assert data["cells"][1][0] == -1.0
        assert data["cells"][2][2] is None

    def test_model_comparison(self):
        """Test preferred degree is reported"""
        x = np.arange(12.0)
        data = json.loads(render(compare_models(x, 50 - 0.05 * x**2), "json"))
        assert data["preferred_degree"] == 2

    def test_metrics(self):
        """Test confusion counts and column percentages"""
        onehot = np.eye(6)
        metrics = evaluate(
            [
                (MarkClass.FAIL, MarkClass.FAIL, onehot[0]),
                (MarkClass.FIRST, MarkClass.FAIL, onehot[0]),
                (MarkClass.FIRST, MarkClass.FIRST, onehot[5]),
            ]
        )
        data = json.loads(render(metrics, "json"))
        assert data["labels"] == ["Fail", "First"]
        assert data["confusion"] == [[1, 0], [1, 1]]
        assert data["column_percentages"][0] == [50.0, 0.0]

    def test_classifier_comparison(self):
        """Test both classifiers are scored next to the reference scores"""
        rng = np.random.default_rng(0)
        rows = [(rng.normal(0.0, 1.0, 2), MarkClass.FAIL) for _ in range(30)]
        rows += [(rng.normal(8.0, 1.0, 2), MarkClass.FIRST) for _ in range(30)]
        comparison = compare_classifiers(LabeledDataset.from_rows(rows, ("x", "y")), trees=5)

        data = json.loads(render(comparison, "json"))
        assert set(data["classifiers"]) == {"NaiveBayes", "RandomForest"}
        assert data["reference"]["RandomForest"]["ca"] == 0.942
        assert data["train_size"] + data["test_size"] == 60

    def test_cleanse_report(self):
        """Test cleanse report fields"""
        report = CleanseReport(input_size=10, records_dropped=3, unresolved_keys=[("S", "M")])
        data = json.loads(render(report, "json"))
        assert data["dropped_percent"] == 30.0
        assert data["unresolved_keys"] == [["S", "M"]]

    def test_manifest_reference(self):
        """Test outputs name the manifest that produced them"""
        data = json.loads(render(PUBLISHED_MEANS, "json", manifest="means.json.manifest.json"))
        assert data["manifest"] == "means.json.manifest.json"
        assert "manifest: x" in render(PUBLISHED_MEANS, "table", manifest="x")

    def test_unknown_format(self):
        """Test unsupported formats"""
        with pytest.raises(ValueError):
            render(PUBLISHED_MEANS, "xml")

    def test_unknown_report(self):
        """Test objects without a rendering"""
        with pytest.raises(TypeError):
            render(object(), "json")
