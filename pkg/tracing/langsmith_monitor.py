"""
LangSmith Tracing
Optional run/step traces for pipeline runs. Without LANGSMITH_API_KEY every
method is a logged no-op so offline runs behave the same.
"""

import os
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import structlog
from langsmith import Client, RunTree

logger = structlog.get_logger()


def _payload_summary(value: Any) -> Any:
    if value is None or isinstance(value, (str, int, float, bool)):
        return value
    if isinstance(value, (bytes, bytearray)):
        return {"bytes": len(value)}
    if hasattr(value, "id") and isinstance(getattr(value, "data", None), bytes):
        return {"block_id": value.id, "bytes": len(value.data)}
    if hasattr(value, "__len__"):
        return {"type": type(value).__name__, "size": len(value)}
    return type(value).__name__


def summarize_stage_payload(payload: Any) -> Dict[str, Any]:
    """
    Inputs or outputs of a @traceable stage with blocks and sets reduced to sizes

    Sequences never leave the process; MergeOutcome-like results keep their counts.
    """
    if not isinstance(payload, dict):
        payload = {"output": payload}
    cleaned = {}
    for key, value in payload.items():
        merged = getattr(value, "merged", None)
        if merged is not None:
            cleaned[key] = {"merged": len(merged), "case2": len(value.case2),
                            "kept": len(value.case1.kept)}
        else:
            cleaned[key] = _payload_summary(value)
    return cleaned


class LangSmithMonitor:
    def __init__(self):
        """Initialize LangSmith tracing when credentials are configured"""
        self.api_key = os.getenv("LANGSMITH_API_KEY")
        self.project_name = os.getenv("LANGSMITH_PROJECT_NAME", "maw-antidictionary")
        self.endpoint = os.getenv("LANGSMITH_ENDPOINT", "https://api.smith.langchain.com")
        self.client: Optional[Client] = None

        if not self.api_key:
            logger.debug("LangSmith tracing disabled, LANGSMITH_API_KEY not set")
            return

        try:
            self.client = Client(api_url=self.endpoint, api_key=self.api_key)
        except Exception as e:
            logger.warning("LangSmith tracing disabled", error=str(e))
            self.client = None
            return

        logger.info("LangSmith monitoring initialized",
                    project_name=self.project_name,
                    endpoint=self.endpoint)

    @property
    def enabled(self) -> bool:
        return self.client is not None

    def create_run_trace(self, run_id: str, config: Dict[str, Any]) -> Optional[RunTree]:
        """
        Create the root trace for one pipeline run

        Args:
            run_id: run identifier
            config: run configuration (ell, alphabet, block count, ...)

        Returns:
            RunTree for the run, or None when tracing is disabled
        """
        if not self.enabled:
            return None

        run_trace = RunTree(
            name="maw_pipeline_run",
            run_type="chain",
            inputs=self._summarize({**config, "timestamp": datetime.now(timezone.utc).isoformat()}),
            project_name=self.project_name,
            tags=["maw", "pipeline", "run"],
            extra={"metadata": {"run_id": run_id, "component": "maw_pipeline"}},
            client=self.client,
        )
        logger.info("Created run trace", run_id=run_id, trace_id=str(run_trace.id))
        return run_trace

    def trace_step(self, run_trace: Optional[RunTree], report) -> Optional[RunTree]:
        """Attach one step's report as a child run"""
        if run_trace is None:
            return None

        fields = report.model_dump(by_alias=True)
        step_trace = run_trace.create_child(
            name=f"step_{report.n}",
            run_type="chain",
            inputs={"N": report.n},
            tags=["step"],
            extra={"metadata": {"component": "maw_pipeline"}},
        )
        step_trace.end(outputs=fields)

        logger.debug("Traced step", step=report.n, set_size=report.set_size,
                     wall_time_ms=report.wall_time_ms)
        return step_trace

    def finalize_run_trace(self, run_trace: Optional[RunTree], totals: Dict[str, Any],
                           error: Optional[str] = None) -> None:
        """Close the run trace and submit it with its step children"""
        if run_trace is None:
            return

        run_trace.end(
            outputs={**totals, "completion_timestamp": datetime.now(timezone.utc).isoformat()},
            error=error,
        )
        try:
            run_trace.post(exclude_child_runs=False)
        except Exception as e:
            logger.warning("Failed to submit run trace", error=str(e))
            return

        logger.info("Finalized run trace", outcome="failed" if error else "completed", **totals)

    def _summarize(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """Replace sequence payloads by their lengths before they leave the process"""
        cleaned = {}
        for key, value in data.items():
            if isinstance(value, (bytes, bytearray)):
                cleaned[key] = {"bytes": len(value)}
            elif "api_key" in key.lower() or "token" in key.lower():
                cleaned[key] = "***REDACTED***"
            else:
                cleaned[key] = value
        return cleaned
