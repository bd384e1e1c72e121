"""
Tests for observability module
"""

import json
import logging
import time

import pytest

from observability import (
    LogLevel,
    StageMetrics,
    StructuredLogger,
    current_run_id,
    get_logger,
    start_run,
)


@pytest.fixture(autouse=True)
def debug_logging(caplog):
    caplog.set_level(logging.DEBUG, logger="markrefine")


class TestStructuredLogger:
    """Test structured logging"""

    def test_basic_logging(self):
        """Test basic log creation"""
        logger = StructuredLogger("ingest")
        logger.info("Parsed transcript source")

        logs = logger.get_logs()
        assert len(logs) == 1
        assert logs[0].message == "Parsed transcript source"
        assert logs[0].level == "INFO"
        assert logs[0].stage == "ingest"

    def test_log_levels(self):
        """Test different log levels"""
        logger = StructuredLogger("refine", min_level=LogLevel.DEBUG)

        logger.debug("Debug message")
        logger.info("Info message")
        logger.warning("Warning message")
        logger.error("Error message")

        levels = [log.level for log in logger.get_logs()]
        assert levels == ["DEBUG", "INFO", "WARNING", "ERROR"]

    def test_log_filtering_by_level(self):
        """Test that logs below min level are filtered"""
        logger = StructuredLogger("cleanse", min_level=LogLevel.WARNING)

        logger.debug("Debug")
        logger.info("Info")
        logger.warning("Warning")
        logger.error("Error")

        logs = logger.get_logs()
        assert len(logs) == 2
        assert all(log.level in ["WARNING", "ERROR"] for log in logs)

    def test_get_logs_by_level(self):
        """Test filtering stored entries by level"""
        logger = StructuredLogger("stats")
        logger.info("one")
        logger.warning("two")

        assert [log.message for log in logger.get_logs(LogLevel.WARNING)] == ["two"]

    def test_log_with_metadata(self):
        """Test logging with metadata"""
        logger = StructuredLogger("ingest")
        logger.info("Rejected row", line=7, reason="non-numeric module_mark")

        logs = logger.get_logs()
        assert logs[0].metadata["line"] == 7
        assert logs[0].metadata["reason"] == "non-numeric module_mark"

    def test_log_json_serialization(self):
        """Test log JSON serialization"""
        logger = StructuredLogger("refine")
        logger.info("Refined records", records=12)

        data = json.loads(logger.get_logs()[0].to_json())
        assert data["message"] == "Refined records"
        assert data["metadata"] == {"records": 12}
        assert data["stage"] == "refine"

    def test_run_id_attached(self):
        """Test entries carry the current run id"""
        run_id = start_run("run-abc")
        logger = get_logger("cli")
        logger.info("hello")

        assert current_run_id() == run_id
        assert logger.get_logs()[0].run_id == "run-abc"

    def test_start_run_generates_id(self):
        """Test a fresh run id is generated when none is given"""
        first = start_run()
        second = start_run()
        assert first and second and first != second

    def test_forwards_to_standard_logging(self, caplog):
        """Test entries reach the markrefine.<stage> logger"""
        logger = StructuredLogger("synthgen")
        with caplog.at_level("INFO", logger="markrefine.synthgen"):
            logger.info("Generated transcripts", records=3)

        assert any("Generated transcripts" in r.getMessage() for r in caplog.records)
        assert caplog.records[0].name == "markrefine.synthgen"

    def test_clear_logs(self):
        """Test clearing logs"""
        logger = StructuredLogger("ingest")
        logger.info("Message 1")
        logger.info("Message 2")

        assert len(logger.get_logs()) == 2

        logger.clear_logs()
        assert len(logger.get_logs()) == 0

    def test_disabled_level_builds_nothing(self, caplog):
        """Test levels the standard logger drops are not stored either"""
        caplog.set_level(logging.WARNING, logger="markrefine.quiet")
        logger = StructuredLogger("quiet")
        logger.debug("Dropped")
        logger.info("Dropped")
        logger.warning("Kept")

        assert [log.message for log in logger.get_logs()] == ["Kept"]

    def test_buffer_is_bounded(self):
        """Test only the most recent entries stay in memory"""
        logger = StructuredLogger("refine", max_entries=3)
        for i in range(5):
            logger.info(f"entry {i}")

        assert [log.message for log in logger.get_logs()] == ["entry 2", "entry 3", "entry 4"]


class TestStageMetrics:
    """Test stage counters and timers"""

    def test_counter_increment(self):
        """Test counter increments"""
        metrics = StageMetrics()
        metrics.increment("ingest", "rows_read")
        metrics.increment("ingest", "rows_read", 4)

        assert metrics.get("ingest", "rows_read") == 5
        assert metrics.get("ingest", "rows_rejected") == 0

    def test_record_many(self):
        """Test recording several counters at once"""
        metrics = StageMetrics()
        metrics.record("cleanse", {"methods_inferred": 3, "records_dropped": 1})

        assert metrics.get("cleanse", "methods_inferred") == 3
        assert metrics.get("cleanse", "records_dropped") == 1

    def test_snapshot_groups_by_stage(self):
        """Test snapshot shape used by run manifests"""
        metrics = StageMetrics()
        metrics.increment("refine", "flagged", 2)
        metrics.increment("ingest", "rows_read", 10)

        assert metrics.snapshot() == {
            "ingest": {"rows_read": 10},
            "refine": {"flagged": 2},
        }

    def test_stage_timer(self):
        """Test stage timing"""
        metrics = StageMetrics()
        with metrics.time_stage("stats"):
            time.sleep(0.01)

        assert metrics.duration_ms("stats") >= 10
        assert metrics.duration_ms("classify") is None

    def test_timer_accumulates(self):
        """Test repeated timing of one stage adds up"""
        metrics = StageMetrics()
        with metrics.time_stage("ingest"):
            time.sleep(0.005)
        first = metrics.duration_ms("ingest")
        with metrics.time_stage("ingest"):
            time.sleep(0.005)

        assert metrics.duration_ms("ingest") > first
