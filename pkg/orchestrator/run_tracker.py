"""
orchestrator/run_tracker.py – Run logs and progress events.

Each report run gets a ``<out>/run/`` directory containing:

* ``logs.txt``     – human-readable timestamped log lines, including records
                     from the pipeline's own loggers while attached
* ``logs.jsonl``   – optional structured JSON-Lines log
* ``events.jsonl`` – append-only progress and report events
* ``status.json``  – running | completed | failed, replaced atomically
"""

from __future__ import annotations

import json
import logging
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from schemas import RankedReport

RUN_DIRNAME = "run"
TRACKED_LOGGERS = ("labor_insights", "orchestrator")


class _TrackerHandler(logging.Handler):
    def __init__(self, tracker: "RunTracker", level: int = logging.INFO) -> None:
        super().__init__(level)
        self.tracker = tracker

    def emit(self, record: logging.LogRecord) -> None:
        try:
            self.tracker.log(record.levelname, f"{record.name}: {record.getMessage()}")
        except Exception:
            self.handleError(record)


class RunTracker:
    """Writes logs and events for one run under ``<out_dir>/run/``.

    Use as a context manager: the run is marked completed on a clean exit
    and failed when an exception escapes.
    """

    def __init__(self, out_dir: str, json_logs: bool = False, run_id: Optional[str] = None) -> None:
        self.run_dir = Path(out_dir) / RUN_DIRNAME
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._log_fh = open(self.run_dir / "logs.txt", "a", encoding="utf-8")
        self._jsonl_fh: Optional[Any] = (
            open(self.run_dir / "logs.jsonl", "a", encoding="utf-8") if json_logs else None
        )
        self._handlers: List[Tuple[logging.Logger, logging.Handler, int]] = []
        self._status: Dict[str, Any] = {
            "run_id": run_id or Path(out_dir).name,
            "status": "running",
            "created_at": _now_iso(),
            "updated_at": _now_iso(),
            "reports": 0,
            "events": [],
        }
        self._flush_status()

    # ── logging ──────────────────────────────────────────────────────────────

    def log(self, level: str, message: str) -> None:
        ts = _now_iso()
        with self._lock:
            self._log_fh.write(f"{ts} [{level.upper()}] {message}\n")
            self._log_fh.flush()
            if self._jsonl_fh is not None:
                self._jsonl_fh.write(json.dumps({"ts": ts, "level": level.upper(), "msg": message}) + "\n")
                self._jsonl_fh.flush()

    def info(self, message: str) -> None:
        self.log("INFO", message)

    def error(self, message: str) -> None:
        self.log("ERROR", message)

    def attach(self, logger_names: Iterable[str] = TRACKED_LOGGERS, level: int = logging.INFO) -> None:
        """Copy records from *logger_names* into ``logs.txt`` until :meth:`close`."""
        for name in logger_names:
            handler = _TrackerHandler(self, level)
            named = logging.getLogger(name)
            self._handlers.append((named, handler, named.level))
            named.addHandler(handler)
            if named.getEffectiveLevel() > level:
                named.setLevel(level)

    # ── events ───────────────────────────────────────────────────────────────

    def emit(self, stage: str, message: str, percent: Optional[int] = None, **fields: Any) -> None:
        """Append an event to ``events.jsonl`` and refresh ``status.json``."""
        event: Dict[str, Any] = {"ts": _now_iso(), "stage": stage, "message": message}
        if percent is not None:
            event["percent"] = percent
        event.update(fields)
        with self._lock:
            with open(self.run_dir / "events.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event) + "\n")
            self._status["updated_at"] = event["ts"]
            self._status["events"].append(event)
            if stage == "report":
                self._status["reports"] += 1
            self._flush_status()
        pct = f" ({percent}%)" if percent is not None else ""
        self.info(f"[{stage}]{pct} {message}")

    def report_event(self, report: RankedReport, percent: Optional[int] = None) -> None:
        self.emit(
            "report",
            f"{report.metric.value} {report.slice.label()}: {report.status.value}",
            percent=percent,
            metric=report.metric.value,
            slice=report.slice.label(),
            status=report.status.value,
            rows=len(report.rows),
            epsilon=report.epsilon,
            delta=report.delta,
        )

    # ── lifecycle ────────────────────────────────────────────────────────────

    def _finish(self, status: str, reason: str = "") -> None:
        with self._lock:
            self._status["status"] = status
            self._status["updated_at"] = _now_iso()
            if reason:
                self._status["error"] = reason
            self._flush_status()

    def complete(self) -> None:
        self._finish("completed")
        self.info("Run completed.")

    def fail(self, reason: str = "") -> None:
        self._finish("failed", reason)
        self.error(f"Run failed: {reason}" if reason else "Run failed.")

    def close(self) -> None:
        for named, handler, previous_level in self._handlers:
            named.removeHandler(handler)
            named.setLevel(previous_level)
        self._handlers.clear()
        self._log_fh.close()
        if self._jsonl_fh is not None:
            self._jsonl_fh.close()

    def get_status(self, last_n_events: int = 20) -> Dict[str, Any]:
        with self._lock:
            status = dict(self._status)
            status["events"] = list(status["events"])[-last_n_events:]
        return status

    def _flush_status(self) -> None:
        # Caller holds self._lock.
        tmp = self.run_dir / "status.json.tmp"
        tmp.write_text(json.dumps(self._status, indent=2), encoding="utf-8")
        tmp.replace(self.run_dir / "status.json")

    def __enter__(self) -> "RunTracker":
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        if exc_type is not None:
            self.fail(str(exc_val) or exc_type.__name__)
        else:
            self.complete()
        self.close()


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def load_status(out_dir: str) -> Optional[Dict[str, Any]]:
    """Load ``<out_dir>/run/status.json``; ``None`` when absent."""
    path = Path(out_dir) / RUN_DIRNAME / "status.json"
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))
