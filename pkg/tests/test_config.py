import json
import logging

import pytest

from core.errors import ConfigurationError
from utils.config import DEFAULTS, AppConfig


def write_config(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding="utf-8")
    return path


def test_defaults_without_file():
    config = AppConfig()
    assert config.get("matching", "ratio") == 0.8
    settings = config.get_evaluation_settings()
    assert settings.ratio == 0.8
    assert len(settings.thresholds) == 51
    assert settings.histogram_bins == 64
    assert settings.cache_dir is None
    assert settings.pyramid.intervals == 3


def test_defaults_are_not_shared():
    AppConfig().set("matching", "ratio", 0.5)
    assert AppConfig().get("matching", "ratio") == 0.8
    assert DEFAULTS["matching"]["ratio"] == 0.8


def test_file_sections_merge_over_defaults(tmp_path):
    path = write_config(tmp_path / "c.json", {"detector": {"contrast_threshold": 0.05},
                                              "evaluation": {"grid": "0:0.25:1"}})
    config = AppConfig(str(path))
    assert config.get_detector_params().contrast_threshold == 0.05
    assert config.get_detector_params().edge_ratio == 10.0
    assert config.get_thresholds() == (0.0, 0.25, 0.5, 0.75, 1.0)


def test_default_location_is_read(isolated_config):
    write_config(isolated_config, {"matching": {"ratio": 0.6}})
    assert AppConfig().get_ratio() == 0.6


def test_unknown_keys_warn(tmp_path, caplog):
    path = write_config(tmp_path / "c.json", {"detector": {"sharpness": 2}, "plotting": {}})
    with caplog.at_level(logging.WARNING):
        config = AppConfig(str(path))
    assert "detector.sharpness" in caplog.text
    assert "plotting" in caplog.text
    assert config.get("detector", "sharpness") is None


def test_explicit_file_must_exist(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        AppConfig(str(tmp_path / "absent.json"))


def test_explicit_file_must_parse(tmp_path):
    path = write_config(tmp_path / "c.json", "{not json")
    with pytest.raises(ConfigurationError):
        AppConfig(str(path))


def test_broken_default_file_falls_back(isolated_config):
    write_config(isolated_config, "{not json")
    assert AppConfig().get_ratio() == 0.8


@pytest.mark.parametrize("data", [
    {"detector": {"edge_ratio": -1}},
    {"pyramid": {"intervals": 0}},
    {"matching": {"ratio": 2}},
    {"matching": {"ratio": "high"}},
    {"evaluation": {"grid": "0:0:1"}},
    {"evaluation": {"jobs": 0}},
])
def test_invalid_values(tmp_path, data):
    config = AppConfig(str(write_config(tmp_path / "c.json", data)))
    with pytest.raises(ConfigurationError):
        config.get_evaluation_settings()


def test_section_must_be_object(tmp_path):
    with pytest.raises(ConfigurationError):
        AppConfig(str(write_config(tmp_path / "c.json", {"detector": 3})))


def test_overrides_skip_none():
    config = AppConfig()
    config.apply_overrides({("detector", "contrast_threshold"): 0.04, ("detector", "edge_ratio"): None})
    params = config.get_detector_params()
    assert params.contrast_threshold == 0.04
    assert params.edge_ratio == 10.0


def test_logging_settings(tmp_path):
    log = tmp_path / "run.log"
    path = write_config(tmp_path / "c.json", {"logging": {"level": "debug", "file": str(log), "backup_count": 2}})
    config = AppConfig(str(path))
    assert config.get_logging_level() == "debug"
    assert config.get_log_file() == str(log)
    assert config.get_log_rotation() == (10, 2)


def test_cache_dir_expands(tmp_path):
    path = write_config(tmp_path / "c.json", {"evaluation": {"cache_dir": str(tmp_path / "cache")}})
    assert AppConfig(str(path)).get_cache_dir() == tmp_path / "cache"
