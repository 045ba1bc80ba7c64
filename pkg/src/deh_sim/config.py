import datetime
import json
import logging

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables (prefix ``DEH_``)."""

    model_config = SettingsConfigDict(env_prefix="DEH_", env_file=".env", case_sensitive=False, extra="ignore")

    # Logging
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="text")  # text or json

    # Numerical defaults
    phi_grid: int = Field(default=64)
    steps_per_period: int = Field(default=200)
    jobs: int = Field(default=1)

    # Output
    output_precision: int = Field(default=12)


# Global settings instance
settings = Settings()


class JSONFormatter(logging.Formatter):
    def format(self, record):
        log_entry = {
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry)


def setup_logging(level: str | None = None, fmt: str | None = None):
    """Configure logging based on settings; explicit arguments win."""
    level_name = (level or settings.log_level).upper()
    log_level = getattr(logging, level_name, logging.INFO)

    handler = logging.StreamHandler()
    if (fmt or settings.log_format).lower() == "json":
        handler.setFormatter(JSONFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    root_logger.handlers.clear()
    root_logger.addHandler(handler)

    logging.getLogger("deh_sim").setLevel(log_level)


def validate_settings(current: Settings | None = None):
    """Validate critical settings."""
    current = current or settings
    errors = []

    valid_log_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
    if current.log_level.upper() not in valid_log_levels:
        errors.append(f"Invalid log level: {current.log_level}")

    if current.log_format.lower() not in ("text", "json"):
        errors.append(f"Invalid log format: {current.log_format}")

    if current.phi_grid <= 0:
        errors.append(f"Phase grid size must be positive: {current.phi_grid}")

    if current.steps_per_period < 16:
        errors.append(f"Steps per period must be at least 16: {current.steps_per_period}")

    if current.jobs < 1:
        errors.append(f"Jobs must be at least 1: {current.jobs}")

    if not (3 <= current.output_precision <= 17):
        errors.append(f"Output precision must be between 3 and 17: {current.output_precision}")

    if errors:
        error_msg = "\n".join(errors)
        raise ConfigError(f"Configuration validation failed:\n{error_msg}")
