"""
Run Logger
Structured logging for pipeline runs: stage events, step reports, space samples, failures
"""

import logging
import sys
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Optional

import structlog

logger = structlog.get_logger()


class LogLevel(Enum):
    DEBUG = "debug"
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


def configure_logging(level: str = "INFO", fmt: str = "json") -> None:
    """Route structlog through stdlib logging on stderr; stdout stays free for tooling"""
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=getattr(logging, level.upper()),
                        force=True)
    renderer = structlog.processors.JSONRenderer() if fmt == "json" else structlog.dev.ConsoleRenderer()
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


class MawRunLogger:
    def __init__(self):
        self._emitters = {
            LogLevel.DEBUG: logger.debug,
            LogLevel.INFO: logger.info,
            LogLevel.WARNING: logger.warning,
            LogLevel.ERROR: logger.error,
            LogLevel.CRITICAL: logger.critical,
        }

    def log_stage_event(self, stage: str, run_id: str, step: int, data: Dict[str, Any],
                        level: LogLevel = LogLevel.INFO) -> Dict[str, Any]:
        """
        Log one stage event of a run

        Args:
            stage: stage name (ingest, single_block, merge, emit, ...)
            run_id: run identifier
            step: step index N, 0 before the first block
            data: event fields; keep to counts and lengths, never sequence bytes
            level: log level
        """
        entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "stage": stage,
            "run_id": run_id,
            "step": step,
            "data": data,
        }
        self._emitters[level]("Stage event", **entry)
        return {"logged": True, "timestamp": entry["timestamp"], "runId": run_id, "stage": stage}

    def log_step_report(self, run_id: str, report) -> Dict[str, Any]:
        fields = report.model_dump(by_alias=True)
        logger.info("Step completed", run_id=run_id, **fields)
        return {"logged": True, "runId": run_id, "step": report.n}

    def log_space_sample(self, run_id: str, step: int, stage: str, elements: int,
                         peak: int) -> Dict[str, Any]:
        logger.debug("Space sample", run_id=run_id, step=step, stage=stage,
                     elements=elements, peak=peak)
        return {"logged": True, "runId": run_id, "elements": elements, "peak": peak}

    def log_run_summary(self, run_id: str, steps: int, ell: int, max_in: int, max_out: int,
                        peak_elements: int, total_wall_time_ms: float,
                        outcome: str = "completed") -> Dict[str, Any]:
        summary = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "run_id": run_id,
            "steps": steps,
            "ell": ell,
            "max_in": max_in,
            "max_out": max_out,
            "peak_elements": peak_elements,
            "total_wall_time_ms": total_wall_time_ms,
            "outcome": outcome,
        }
        if outcome == "completed":
            logger.info("Run completed", **summary)
        else:
            logger.error("Run ended early", **summary)
        return {"logged": True, "runId": run_id, "outcome": outcome}

    def log_input_failure(self, error_type: str, message: str,
                          context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "error_type": error_type,
            "error_message": message,
            "context": context or {},
        }
        logger.error("Input rejected", **entry)
        return {"logged": True, "timestamp": entry["timestamp"], "errorType": error_type}


# Global run logger instance
maw_logger = MawRunLogger()
