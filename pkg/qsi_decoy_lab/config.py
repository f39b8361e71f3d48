"""Configuration management for QSI Decoy Lab."""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import toml
from pydantic import BaseModel, Field
from pydantic import ValidationError as PydanticValidationError

from .models.report import RunConfig
from .utils.error_handling import ConfigurationError, FileSystemError

logger = logging.getLogger(__name__)

THREADS_ENV = "QSI_THREADS"


class UIConfig(BaseModel):
    """Configuration for terminal output."""

    table_style: str = Field(default="rich", pattern="^(rich|simple|minimal)$")
    colors: bool = Field(default=True)


class ExportConfig(BaseModel):
    """Configuration for result files."""

    csv_precision: int = Field(default=17, ge=1, le=17, description="Significant digits in CSV")
    json_indent: int = Field(default=2, ge=0, le=8)


class RuntimeConfig(BaseModel):
    """Configuration for parallel evaluation."""

    threads: int = Field(default=1, ge=1, le=256, description="Worker threads when QSI_THREADS is unset")


class Config(BaseModel):
    """Main configuration class."""

    ui: UIConfig = Field(default_factory=UIConfig)
    export: ExportConfig = Field(default_factory=ExportConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)


class ConfigManager:
    """Manages configuration loading and access."""

    def __init__(self, config_path: Optional[str] = None):
        """Initialize configuration manager.

        Args:
            config_path: Path to configuration file. If None, searches standard locations.
        """
        self.config_path = config_path or self._find_config_file()
        self._config: Optional[Config] = None

    def _find_config_file(self) -> str:
        """Find configuration file in standard locations."""
        search_paths = [
            os.path.expanduser("~/.config/qsi-decoy-lab/config.toml"),
            "qsi_decoy_lab.toml",
            os.path.join(os.path.dirname(__file__), "config.toml"),
        ]

        for path in search_paths:
            if os.path.exists(path):
                return path

        return search_paths[-1]

    @property
    def config(self) -> Config:
        """Get configuration, loading if necessary."""
        if self._config is None:
            self._config = self._load_config()
        return self._config

    def _load_config(self) -> Config:
        """Load configuration from TOML file."""
        if not os.path.exists(self.config_path):
            return Config()

        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                config_data = toml.load(f)
            return Config(**config_data)
        except (toml.TomlDecodeError, PydanticValidationError) as e:
            raise ConfigurationError(f"Invalid settings file {self.config_path}: {e}")

    def reload(self):
        """Reload configuration."""
        self._config = None


config_manager = ConfigManager()


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker thread count: explicit value, then QSI_THREADS, then settings."""
    if threads is not None:
        return max(1, int(threads))
    raw = os.getenv(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
    return config_manager.config.runtime.threads


def format_validation_error(error: PydanticValidationError) -> str:
    """One line per problem, prefixed by the dotted field location."""
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{location}: {item['msg']}")
    return "; ".join(lines)


def _read_document(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FileSystemError(f"Cannot read config {path}: {e}", details={"path": str(path)})

    try:
        if path.suffix.lower() == ".toml":
            data = toml.loads(text)
        else:
            data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"{path}:{e.lineno}:{e.colno}: {e.msg}",
            details={"path": str(path), "line": e.lineno, "column": e.colno},
        )
    except toml.TomlDecodeError as e:
        raise ConfigurationError(f"{path}: {e}", details={"path": str(path)})

    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be an object", details={"path": str(path)})
    return data


def load_run_config(
    path: Optional[Union[str, Path]] = None, seed: Optional[int] = None
) -> RunConfig:
    """Load and validate a run configuration.

    Args:
        path: JSON (or .toml) run configuration; None gives the defaults
        seed: Overrides the configured seed

    Returns:
        Fully resolved RunConfig

    Raises:
        FileSystemError: If the file cannot be read
        ConfigurationError: If the document is malformed or fails validation
    """
    data: Dict[str, Any] = {}
    base_dir = None
    if path is not None:
        path = Path(path)
        data = _read_document(path)
        base_dir = path.parent
    if seed is not None:
        data["seed"] = seed

    try:
        run_config = RunConfig.model_validate(data)
    except PydanticValidationError as e:
        raise ConfigurationError(format_validation_error(e), details={"path": str(path) if path else None})

    if base_dir is not None:
        run_config = run_config.resolve_paths(base_dir)
    logger.debug("Loaded run configuration from %s", path or "defaults")
    return run_config
