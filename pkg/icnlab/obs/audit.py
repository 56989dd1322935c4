"""Run Audit Ledger

JSONL ledger of CLI runs with run ids, inputs, result summaries and
structured warnings.
"""

import json
import logging
import os
import time
import uuid
from dataclasses import asdict, dataclass
from datetime import UTC, datetime
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_AUDIT_PATH = "logs/icnlab_audit.jsonl"
AUDIT_ENV = "ICNLAB_AUDIT_LOG"


@dataclass
class AuditEvent:
    """One ledger line."""

    timestamp: str
    run_id: str
    event_type: str
    command: str
    input_data: dict[str, Any]
    output_data: dict[str, Any]
    duration_ms: float | None = None
    error: str | None = None


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class AuditLogger:
    """Append-only JSONL run ledger; a logger with no path records nothing."""

    def __init__(self, log_path: str | None = None):
        self.log_path = log_path or ""
        if self.enabled:
            self._ensure_log_directory()

    @property
    def enabled(self) -> bool:
        return bool(self.log_path)

    def _ensure_log_directory(self):
        directory = os.path.dirname(self.log_path)
        if directory:
            os.makedirs(directory, exist_ok=True)

    def _generate_run_id(self) -> str:
        return str(uuid.uuid4())

    def log_run(
        self,
        command: str,
        input_data: dict[str, Any],
        output_data: dict[str, Any],
        start_time: float | None = None,
        error: str | None = None,
    ) -> str:
        """Record one CLI command; returns the run id."""
        run_id = self._generate_run_id()
        duration_ms = None
        if start_time:
            duration_ms = (time.time() - start_time) * 1000

        self._write_event(
            AuditEvent(
                timestamp=datetime.now(UTC).isoformat(),
                run_id=run_id,
                event_type="run",
                command=command,
                input_data=input_data,
                output_data=output_data,
                duration_ms=duration_ms,
                error=error,
            ),
        )
        return run_id

    def log_warning(self, run_id: str, command: str, message: str, details: dict[str, Any]):
        """Record a structured warning attached to a run."""
        self._write_event(
            AuditEvent(
                timestamp=datetime.now(UTC).isoformat(),
                run_id=run_id,
                event_type="warning",
                command=command,
                input_data=details,
                output_data={"message": message},
            ),
        )

    def _write_event(self, event: AuditEvent):
        if not self.enabled:
            return
        try:
            with open(self.log_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(asdict(event), default=_json_default) + "\n")
        except OSError as e:
            logger.warning("Could not write audit event to %s: %s", self.log_path, e)

    def get_recent_events(self, limit: int = 100) -> list[dict[str, Any]]:
        """Last `limit` events, oldest first; unreadable lines are skipped."""
        if not self.enabled or not os.path.exists(self.log_path):
            return []

        with open(self.log_path, encoding="utf-8") as f:
            lines = f.readlines()

        events = []
        for line in lines[-limit:]:
            if line.strip():
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError:
                    continue
        return events

    def get_events_by_run_id(self, run_id: str) -> list[dict[str, Any]]:
        return [e for e in self.get_recent_events(limit=10_000) if e.get("run_id") == run_id]


def audit_logger_from_env() -> AuditLogger:
    """Ledger at $ICNLAB_AUDIT_LOG (default logs/icnlab_audit.jsonl); empty disables it."""
    return AuditLogger(os.getenv(AUDIT_ENV, DEFAULT_AUDIT_PATH))
