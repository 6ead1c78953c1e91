"""
Application configuration for sift-bench
"""

import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from core.errors import ArgumentError, ConfigurationError
from core.evaluation import EvaluationSettings, parse_grid
from core.keypoints import DetectorParams
from core.scale_space import PyramidParams

DEFAULT_CONFIG_FILE = Path.home() / ".sift-bench" / "config.json"

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "pyramid": {
        "intervals": 3,
        "base_sigma": 1.6,
        "assumed_blur": 0.5,
        "initial_doubling": False,
        "min_dimension": 16
    },
    "detector": {
        "contrast_threshold": 0.03,
        "edge_ratio": 10.0,
        "max_refine_iterations": 5,
        "orientation_bins": 36,
        "peak_ratio": 0.8,
        "prefilter_ratio": 0.5
    },
    "matching": {
        "ratio": 0.8
    },
    "evaluation": {
        "grid": "0:0.02:1",
        "jobs": 1,
        "histogram_bins": 64,
        "cache_dir": ""
    },
    "logging": {
        "level": "INFO",
        "file": "",
        "max_file_size_mb": 10,
        "backup_count": 5
    }
}


class AppConfig:
    """Application configuration manager"""

    def __init__(self, config_file: Optional[str] = None):
        self.logger = logging.getLogger(__name__)

        # an explicit file must exist; the default one is optional
        self.explicit = config_file is not None
        self.config_file = Path(config_file) if config_file else DEFAULT_CONFIG_FILE
        self.config = self._load_default_config()
        self._load_config()

    def _load_default_config(self) -> Dict[str, Any]:
        """Load default configuration"""
        return copy.deepcopy(DEFAULTS)

    def _load_config(self):
        """Load configuration from file"""
        if not self.config_file.exists():
            if self.explicit:
                raise ConfigurationError(f"configuration file not found: {self.config_file}")
            self.logger.debug("Using default configuration")
            return

        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                file_config = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            if self.explicit:
                raise ConfigurationError(f"cannot read configuration {self.config_file}: {e}")
            self.logger.error(f"Error loading configuration: {e}")
            self.logger.info("Using default configuration")
            return

        if not isinstance(file_config, dict):
            raise ConfigurationError(f"{self.config_file}: top level must be an object of sections")
        self._merge_config(file_config)
        self.logger.debug(f"Configuration loaded from {self.config_file}")

    def _merge_config(self, file_config: Dict[str, Any]):
        """Merge file config with default config"""
        for section, values in file_config.items():
            if section not in self.config:
                self.logger.warning(f"Ignoring unknown configuration section '{section}'")
                continue
            if not isinstance(values, dict):
                raise ConfigurationError(f"{self.config_file}: section '{section}' must be an object")
            for key in values:
                if key not in self.config[section]:
                    self.logger.warning(f"Ignoring unknown configuration key '{section}.{key}'")
            self.config[section].update({k: v for k, v in values.items() if k in self.config[section]})

    def get(self, section: str, key: str, default: Any = None) -> Any:
        """
        Get configuration value

        Args:
            section: Configuration section
            key: Configuration key
            default: Default value if not found

        Returns:
            Configuration value
        """
        return self.config.get(section, {}).get(key, default)

    def set(self, section: str, key: str, value: Any):
        """
        Set configuration value

        Args:
            section: Configuration section
            key: Configuration key
            value: Value to set
        """
        if section not in self.config:
            self.config[section] = {}
        self.config[section][key] = value

    def apply_overrides(self, overrides: Dict[Tuple[str, str], Any]):
        """Set every (section, key) whose override value is not None"""
        for (section, key), value in overrides.items():
            if value is not None:
                self.set(section, key, value)

    def get_pyramid_params(self) -> PyramidParams:
        """Get scale-space parameters"""
        return self._build("pyramid", PyramidParams)

    def get_detector_params(self) -> DetectorParams:
        """Get detector thresholds"""
        return self._build("detector", DetectorParams)

    def get_ratio(self) -> float:
        """Get ratio-test threshold"""
        ratio = self._number("matching", "ratio")
        if not 0 < ratio <= 1:
            raise ConfigurationError(f"matching.ratio must be in (0, 1], got {ratio}")
        return ratio

    def get_thresholds(self) -> Tuple[float, ...]:
        """Get the evaluation threshold grid"""
        try:
            return parse_grid(str(self.get("evaluation", "grid")))
        except ArgumentError as e:
            raise ConfigurationError(f"evaluation.grid: {e}")

    def get_cache_dir(self) -> Optional[Path]:
        """Get feature cache directory, None when caching to disk is off"""
        value = self.get("evaluation", "cache_dir", "")
        return Path(value).expanduser() if value else None

    def get_evaluation_settings(self) -> EvaluationSettings:
        """Get everything an evaluation run needs"""
        try:
            return EvaluationSettings(
                pyramid=self.get_pyramid_params(),
                detector=self.get_detector_params(),
                ratio=self.get_ratio(),
                thresholds=self.get_thresholds(),
                histogram_bins=int(self._number("evaluation", "histogram_bins")),
                jobs=int(self._number("evaluation", "jobs")),
                cache_dir=self.get_cache_dir(),
            )
        except ArgumentError as e:
            raise ConfigurationError(f"invalid evaluation configuration: {e}")

    def get_logging_level(self) -> str:
        """Get logging level"""
        return str(self.get("logging", "level", "INFO"))

    def get_log_file(self) -> str:
        """Get log file path, empty when file logging is off"""
        return str(self.get("logging", "file", "") or "")

    def get_log_rotation(self) -> Tuple[int, int]:
        """Get (max_file_size_mb, backup_count) for the rotating log file"""
        return int(self._number("logging", "max_file_size_mb")), int(self._number("logging", "backup_count"))

    def _number(self, section: str, key: str) -> float:
        value = self.get(section, key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{section}.{key} must be a number, got {value!r}")
        return value

    def _build(self, section: str, factory):
        try:
            return factory(**self.config[section])
        except (ArgumentError, TypeError) as e:
            raise ConfigurationError(f"invalid {section} configuration: {e}")

