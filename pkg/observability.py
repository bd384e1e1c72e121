"""
Observability module for pipeline logging and stage metrics

Provides structured logging and per-stage counters/timers for the
markrefine pipeline. Every log entry carries the id of the run that
produced it so that emitted reports can be traced back to their manifest.
"""

import contextvars
import json
import logging
import time
import uuid
from collections import defaultdict, deque
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Deque, Dict, List, Optional

# Context variable for the current run id
_run_context: contextvars.ContextVar = contextvars.ContextVar(
    "run_context", default=None
)


class LogLevel(Enum):
    """Standard log levels"""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


_LEVEL_ORDER = [
    LogLevel.DEBUG,
    LogLevel.INFO,
    LogLevel.WARNING,
    LogLevel.ERROR,
    LogLevel.CRITICAL,
]


# Entries kept in memory per logger; older ones are discarded
MAX_BUFFERED_ENTRIES = 10_000


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class LogEntry:
    """Structured log entry"""

    timestamp: str
    level: str
    message: str
    stage: str
    run_id: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        """Convert to JSON string"""
        return json.dumps(asdict(self), default=str, sort_keys=True)


def start_run(run_id: Optional[str] = None) -> str:
    """
    Bind a run id to the current context

    Args:
        run_id: Explicit id, generated when omitted

    Returns:
        The run id now in effect
    """
    run_id = run_id or uuid.uuid4().hex
    _run_context.set(run_id)
    return run_id


def current_run_id() -> Optional[str]:
    """Run id bound to the current context, if any"""
    return _run_context.get()


class StructuredLogger:
    """
    Structured JSON logger with run context support

    Entries are forwarded as JSON to the standard logging module under
    ``markrefine.<stage>``; the most recent ones are also kept in memory.
    Nothing is built for levels that logger has disabled.
    """

    def __init__(
        self,
        stage: str,
        min_level: LogLevel = LogLevel.DEBUG,
        max_entries: int = MAX_BUFFERED_ENTRIES,
    ):
        """
        Initialize structured logger

        Args:
            stage: Pipeline stage the logger reports for
            min_level: Minimum log level to record
            max_entries: Most recent entries kept in memory
        """
        self.stage = stage
        self.min_level = min_level
        self._logs: Deque[LogEntry] = deque(maxlen=max_entries)
        self._std = logging.getLogger(f"markrefine.{stage}")

    def _should_log(self, level: LogLevel) -> bool:
        return _LEVEL_ORDER.index(level) >= _LEVEL_ORDER.index(self.min_level)

    def _log(self, level: LogLevel, message: str, **metadata):
        std_level = getattr(logging, level.value)
        if not self._should_log(level) or not self._std.isEnabledFor(std_level):
            return

        entry = LogEntry(
            timestamp=utc_now(),
            level=level.value,
            message=message,
            stage=self.stage,
            run_id=current_run_id(),
            metadata=metadata,
        )
        self._logs.append(entry)
        self._std.log(std_level, entry.to_json())

    def debug(self, message: str, **metadata):
        """Log debug message"""
        self._log(LogLevel.DEBUG, message, **metadata)

    def info(self, message: str, **metadata):
        """Log info message"""
        self._log(LogLevel.INFO, message, **metadata)

    def warning(self, message: str, **metadata):
        """Log warning message"""
        self._log(LogLevel.WARNING, message, **metadata)

    def error(self, message: str, **metadata):
        """Log error message"""
        self._log(LogLevel.ERROR, message, **metadata)

    def get_logs(self, level: Optional[LogLevel] = None) -> List[LogEntry]:
        """
        Get recorded entries, optionally restricted to one level

        Args:
            level: Level to filter by

        Returns:
            List of log entries
        """
        if level is None:
            return list(self._logs)
        return [log for log in self._logs if log.level == level.value]

    def clear_logs(self):
        """Clear all stored logs"""
        self._logs.clear()


def get_logger(stage: str) -> StructuredLogger:
    """Logger for a pipeline stage"""
    return StructuredLogger(stage)


class StageMetrics:
    """
    Counters and timers for pipeline stages

    Counter keys are ``<stage>.<name>``; the snapshot is what a run manifest
    records as its per-stage counts.
    """

    def __init__(self):
        self._counters: Dict[str, int] = defaultdict(int)
        self._durations_ms: Dict[str, float] = {}

    def increment(self, stage: str, name: str, value: int = 1):
        """
        Increment a stage counter

        Args:
            stage: Stage name
            name: Counter name within the stage
            value: Amount to add
        """
        self._counters[f"{stage}.{name}"] += value

    def record(self, stage: str, counts: Dict[str, int]):
        """Add several counters for one stage"""
        for name, value in counts.items():
            self.increment(stage, name, int(value))

    def get(self, stage: str, name: str) -> int:
        """Current value of a counter (0 when never set)"""
        return self._counters.get(f"{stage}.{name}", 0)

    def time_stage(self, stage: str) -> "StageTimer":
        """
        Context manager timing a stage

        Usage:
            with metrics.time_stage("cleanse"):
                ...
        """
        return StageTimer(self, stage)

    def duration_ms(self, stage: str) -> Optional[float]:
        return self._durations_ms.get(stage)

    def snapshot(self) -> Dict[str, Dict[str, int]]:
        """Counters grouped by stage, keys sorted"""
        grouped: Dict[str, Dict[str, int]] = defaultdict(dict)
        for key in sorted(self._counters):
            stage, name = key.split(".", 1)
            grouped[stage][name] = self._counters[key]
        return dict(grouped)


class StageTimer:
    """Context manager for timing a stage"""

    def __init__(self, metrics: StageMetrics, stage: str):
        self.metrics = metrics
        self.stage = stage
        self.start_time: Optional[float] = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        elapsed = (time.perf_counter() - self.start_time) * 1000
        self.metrics._durations_ms[self.stage] = (
            self.metrics._durations_ms.get(self.stage, 0.0) + elapsed
        )
