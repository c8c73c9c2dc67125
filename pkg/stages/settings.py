"""
Engine Settings
Environment-backed configuration, read once per run after load_dotenv()
"""

import os
from typing import Optional

import structlog
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from .errors import ConfigError

logger = structlog.get_logger()

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


def _parse_bool(name: str, raw: str) -> bool:
    value = raw.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ConfigError(f"{name} must be a boolean, got {raw!r}", {"variable": name})


def parse_separator(raw: str) -> int:
    """Accept a single character or a decimal/hex byte value ('#', '35', '0x00')"""
    raw = raw.strip()
    if len(raw) == 1 and not raw.isdigit():
        return ord(raw)
    try:
        value = int(raw, 0)
    except ValueError:
        raise ConfigError(f"separator must be one character or a byte value, got {raw!r}")
    if not 0 <= value <= 255:
        raise ConfigError(f"separator byte out of range: {value}")
    return value


class EngineSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    log_level: str = "INFO"
    log_format: str = "json"
    check_patterns: bool = False
    verify: bool = False
    spool_dir: Optional[str] = None
    text_separator: int = 0x23
    dna_separator: int = 0x00

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value}")
        return value

    @field_validator("log_format")
    @classmethod
    def _known_format(cls, value: str) -> str:
        value = value.lower()
        if value not in {"json", "console"}:
            raise ValueError(f"unknown log format {value}")
        return value

    @classmethod
    def from_env(cls) -> "EngineSettings":
        """Build settings from MAWS_* environment variables"""
        values = {
            "log_level": os.getenv("MAWS_LOG_LEVEL", "INFO"),
            "log_format": os.getenv("MAWS_LOG_FORMAT", "json"),
            "check_patterns": _parse_bool("MAWS_CHECK_PATTERNS", os.getenv("MAWS_CHECK_PATTERNS", "false")),
            "verify": _parse_bool("MAWS_VERIFY", os.getenv("MAWS_VERIFY", "false")),
            "spool_dir": os.getenv("MAWS_SPOOL_DIR") or None,
        }
        if os.getenv("MAWS_TEXT_SEPARATOR"):
            values["text_separator"] = parse_separator(os.getenv("MAWS_TEXT_SEPARATOR"))
        if os.getenv("MAWS_DNA_SEPARATOR"):
            values["dna_separator"] = parse_separator(os.getenv("MAWS_DNA_SEPARATOR"))

        try:
            settings = cls(**values)
        except ValidationError as e:
            raise ConfigError(f"invalid environment configuration: {e.errors()[0]['msg']}")

        logger.debug("Engine settings loaded", **settings.model_dump())
        return settings
