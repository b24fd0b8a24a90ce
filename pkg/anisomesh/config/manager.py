"""
Configuration Manager - Persistent user defaults for adaptive runs.
"""

import json
import math
import platform
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from ..core.tensor import MetricKind
from ..utils.logger import anisomesh_home, get_logger

logger = get_logger(__name__)

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]


class AnisomeshSettings(BaseSettings):
    """Typed defaults; ANISOMESH_* environment variables win over the config file."""
    model_config = SettingsConfigDict(env_prefix="ANISOMESH_", extra="ignore")

    initial_n: int = Field(default=16, ge=1)
    iterations: int = Field(default=10, ge=1)
    n_target: int = Field(default=4000, ge=1)
    metric: MetricKind = MetricKind.NEW_H1
    split_threshold: float = math.sqrt(2.0)
    collapse_threshold: float = 1.0 / math.sqrt(2.0)
    max_local_passes: int = Field(default=20, ge=1)
    smoothing_passes: int = Field(default=2, ge=0)
    log_level: LogLevel = "INFO"

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type,
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return env_settings, init_settings

    @model_validator(mode="after")
    def _check_thresholds(self) -> "AnisomeshSettings":
        if not (0.0 < self.collapse_threshold < 1.0 < self.split_threshold):
            raise ValueError("Thresholds must satisfy 0 < collapse_threshold < 1 < split_threshold")
        return self


class ConfigManager:
    """Configuration management system."""

    def __init__(self, home: Optional[Path] = None) -> None:
        self.config_dir = Path(home) if home is not None else anisomesh_home()
        self.config_file = self.config_dir / "config.json"
        self._config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load raw values from file."""
        if self.config_file.exists():
            try:
                with open(self.config_file, "r") as f:
                    data = json.load(f)
                if isinstance(data, dict):
                    return data
                logger.warning(f"Ignoring {self.config_file}: not a JSON object")
            except (OSError, json.JSONDecodeError) as e:
                logger.warning(f"Ignoring unreadable {self.config_file}: {e}")
        return {}

    def _save_config(self) -> None:
        self.config_dir.mkdir(parents=True, exist_ok=True)
        with open(self.config_file, "w") as f:
            json.dump(self._config, f, indent=2, sort_keys=True)

    @property
    def settings(self) -> AnisomeshSettings:
        """Effective settings; an invalid file falls back to defaults with a warning."""
        try:
            return AnisomeshSettings(**self._config)
        except ValidationError as e:
            logger.warning(f"Invalid configuration in {self.config_file}, using defaults: {e}")
            return AnisomeshSettings()

    def get(self, key: str) -> Any:
        return getattr(self.settings, key)

    def set(self, **updates: Any) -> AnisomeshSettings:
        """Validate and persist new values; None entries are ignored."""
        updates = {k: (v.value if isinstance(v, MetricKind) else v) for k, v in updates.items() if v is not None}
        unknown = [k for k in updates if k not in AnisomeshSettings.model_fields]
        if unknown:
            raise KeyError(f"Unknown configuration keys: {', '.join(unknown)}")
        merged = {**self._config, **updates}
        settings = AnisomeshSettings(**merged)
        self._config = merged
        self._save_config()
        logger.info(f"Configuration updated: {updates}")
        return settings

    def reset(self) -> None:
        self._config = {}
        self._save_config()

    def show_config(self) -> Dict[str, Any]:
        """Effective values, as plain JSON types."""
        return self.settings.model_dump(mode="json")

    def run_diagnostics(self) -> List[Tuple[str, bool, str]]:
        """(check, ok, detail) rows describing the runtime environment."""
        rows: List[Tuple[str, bool, str]] = [
            ("python", sys.version_info >= (3, 9), platform.python_version()),
        ]

        deps = {
            "numpy": "arrays",
            "scipy": "sparse solver, KD-tree",
            "pydantic": "configuration models",
            "pydantic_settings": "settings",
            "click": "command line",
            "rich": "terminal output",
            "psutil": "system diagnostics",
        }
        for dep, description in deps.items():
            try:
                module = __import__(dep)
                rows.append((dep, True, f"{getattr(module, '__version__', 'installed')} ({description})"))
            except ImportError:
                rows.append((dep, False, f"not installed ({description})"))

        try:
            import psutil

            memory = psutil.virtual_memory()
            rows.append(("cpu", True, f"{psutil.cpu_count(logical=False) or '?'} cores / "
                                      f"{psutil.cpu_count()} threads"))
            rows.append(("memory", memory.available > 512 * 2**20,
                         f"{memory.available / 2**30:.1f} GiB free of {memory.total / 2**30:.1f} GiB"))
        except ImportError:
            pass

        writable = True
        try:
            self.config_dir.mkdir(parents=True, exist_ok=True)
        except OSError:
            writable = False
        rows.append(("home", writable, str(self.config_dir)))
        return rows
