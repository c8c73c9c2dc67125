"""
Error Handler
Turns engine exceptions into one-line diagnostics and process exit statuses
"""

from typing import Any, Dict, Optional, Tuple

import structlog

from .errors import InvariantViolation, MawEngineError
from .logger import maw_logger

logger = structlog.get_logger()


class ErrorHandler:
    def get_error_message(self, error_type: str, context: Optional[Dict[str, Any]] = None) -> str:
        """
        Diagnostic prefix for an error type

        Args:
            error_type: MawEngineError.error_type slug
            context: error context used for specific hints
        """
        error_messages = {
            "byte_outside_alphabet": "input contains a byte outside the alphabet",
            "empty_input": "input is empty",
            "malformed_fasta": "input is not valid FASTA",
            "bad_block_count": "invalid block count",
            "index_out_of_range": "index out of range",
            "block_mismatch": "tuple refers to another block",
            "sentinel_collision": "sentinel byte occurs in the text",
            "weight_out_of_range": "weighted ancestor query out of range",
            "patterns_not_prefix_free": "patterns are not prefix-free",
            "config": "invalid configuration",
            "block_store": "cannot access spooled blocks",
            "invariant_violation": "internal invariant violated",
            "general": "internal error",
        }

        base_message = error_messages.get(error_type, error_messages["general"])

        if context:
            if error_type == "byte_outside_alphabet" and context.get("byte") == ord("N"):
                base_message += " (use --fasta-policy split to break records at N runs)"
            elif error_type == "bad_block_count" and context.get("length") is not None:
                base_message += f" (input has {context['length']} letters)"

        return base_message

    def handle(self, error: BaseException) -> Tuple[int, str]:
        """Log the error and return (exit status, diagnostic line)"""
        if isinstance(error, MawEngineError):
            prefix = self.get_error_message(error.error_type, error.context)
            status = error.exit_status
            if isinstance(error, InvariantViolation):
                logger.critical("Invariant violation", error=str(error), context=error.context)
            else:
                maw_logger.log_input_failure(error.error_type, str(error), error.context)
            detail = str(error)
            return status, detail if error.error_type == "config" else f"{prefix}: {detail}"

        logger.critical("Unexpected error", error=str(error), error_class=type(error).__name__,
                        exc_info=error)
        return 2, f"{self.get_error_message('general')}: {type(error).__name__}: {error}"


# Global error handler instance
error_handler = ErrorHandler()
