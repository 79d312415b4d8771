"""
Radial Wave Lab - Application Settings
Environment-backed settings and logging setup
"""

import os
import sys
from dataclasses import dataclass
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from loguru import logger

from constants import APP_NAME, APP_VERSION, BOUND_TOLERANCE, ENV_PREFIX

# Load environment variables from .env file
load_dotenv()

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name} | {message}"


@dataclass
class AppConfig:
    """Main application configuration"""
    app_name: str = APP_NAME
    app_version: str = APP_VERSION
    environment: str = "development"
    log_level: str = "INFO"


@dataclass
class RunConfig:
    """Execution and persistence defaults"""
    threads: int = 1
    output_dir: str = "results"
    include_metadata: bool = True


@dataclass
class ToleranceConfig:
    """Tolerances that may be tightened or relaxed per machine"""
    bound_tolerance: float = BOUND_TOLERANCE


class ConfigManager:
    """
    Centralized configuration manager
    Loads RWL_* environment variables with fallback defaults
    """

    def __init__(self):
        self._app_config = None
        self._run_config = None
        self._tolerance_config = None
        self._load_configs()

    def _load_configs(self) -> None:
        """Load all configuration sections"""
        self._app_config = AppConfig(
            environment=self._get_env_var("ENV", "development"),
            log_level=self._get_env_var("LOG_LEVEL", "INFO").upper(),
        )
        self._run_config = RunConfig(
            threads=max(1, int(self._get_env_var("THREADS", "1"))),
            output_dir=self._get_env_var("OUTPUT_DIR", "results"),
            include_metadata=self._get_bool_env("INCLUDE_METADATA", True),
        )
        self._tolerance_config = ToleranceConfig(
            bound_tolerance=float(self._get_env_var("BOUND_TOLERANCE", str(BOUND_TOLERANCE))),
        )

    def _get_env_var(self, key: str, default: Optional[str] = None, required: bool = False) -> str:
        """
        Get a prefixed environment variable

        Raises:
            ValueError: If a required variable is not set
        """
        value = os.getenv(ENV_PREFIX + key, default)
        if required and not value:
            raise ValueError(f"Required environment variable '{ENV_PREFIX + key}' is not set")
        return value or ""

    def _get_bool_env(self, key: str, default: bool = False) -> bool:
        value = os.getenv(ENV_PREFIX + key, str(default)).lower()
        return value in ("true", "1", "yes", "on")

    def reload(self) -> None:
        """Re-read the environment (tests change it between cases)"""
        self._load_configs()

    @property
    def app(self) -> AppConfig:
        return self._app_config

    @property
    def run(self) -> RunConfig:
        return self._run_config

    @property
    def tolerances(self) -> ToleranceConfig:
        return self._tolerance_config

    def is_development(self) -> bool:
        return self._app_config.environment == "development"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "app": dict(self._app_config.__dict__),
            "run": dict(self._run_config.__dict__),
            "tolerances": dict(self._tolerance_config.__dict__),
        }


def configure_logging(level: Optional[str] = None) -> None:
    """Replace loguru's default sink with a single stderr sink at the requested level"""
    logger.remove()
    logger.add(sys.stderr, level=(level or config.app.log_level).upper(), format=LOG_FORMAT)


# Global configuration instance
config = ConfigManager()
