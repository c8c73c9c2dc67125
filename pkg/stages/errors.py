"""
Engine Errors
Exception hierarchy shared by every stage; error_handler maps these to diagnostics
"""

from typing import Any, Dict, Optional


class MawEngineError(Exception):
    """Base class for all engine errors"""

    error_type = "general"
    exit_status = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context = context or {}


class InputError(MawEngineError):
    """Raised for bad input data or configuration (exit status 1)"""


class ByteOutsideAlphabet(InputError):
    error_type = "byte_outside_alphabet"

    def __init__(self, position: int, byte: int, record: Optional[str] = None):
        shown = chr(byte) if 32 <= byte < 127 else f"0x{byte:02x}"
        where = f" in record {record!r}" if record else ""
        super().__init__(
            f"byte {shown!r} at position {position}{where} is not in the alphabet",
            {"position": position, "byte": byte, "record": record},
        )
        self.position = position
        self.byte = byte


class EmptyInput(InputError):
    error_type = "empty_input"


class MalformedFasta(InputError):
    error_type = "malformed_fasta"


class BadBlockCount(InputError):
    error_type = "bad_block_count"


class IndexOutOfRange(InputError):
    error_type = "index_out_of_range"


class BlockMismatch(InputError):
    error_type = "block_mismatch"


class SentinelCollision(InputError):
    error_type = "sentinel_collision"


class WeightOutOfRange(InputError):
    error_type = "weight_out_of_range"


class PatternsNotPrefixFree(InputError):
    error_type = "patterns_not_prefix_free"


class ConfigError(InputError):
    error_type = "config"


class BlockStoreError(InputError):
    error_type = "block_store"


class InvariantViolation(MawEngineError):
    """An internal self-check failed (exit status 2)"""

    error_type = "invariant_violation"
    exit_status = 2
