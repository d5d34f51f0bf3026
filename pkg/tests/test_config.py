import pytest
from unittest.mock import patch

from qfit.config import (
    DEFAULT_BUDGET,
    DEFAULT_CAP,
    Setting,
    Settings,
    _SETTINGS_REGISTRY,
    get_setting,
    list_settings,
    load_settings,
)


def test_defaults():
    settings = load_settings()
    assert settings.cap == DEFAULT_CAP
    assert settings.budget == DEFAULT_BUDGET
    assert settings.format == "pretty"
    assert settings.dual_cap is None


@pytest.mark.parametrize(
    "values",
    [
        {"cap": 0},
        {"cap": "8"},
        {"cap": True},
        {"budget": -5},
        {"check_bound": -1},
        {"dual_cap": 0},
        {"format": "yaml"},
        {"colour": "blue"},
    ],
)
def test_from_mapping_rejects(values):
    with pytest.raises(ValueError):
        Settings.from_mapping(values)


def test_with_overrides_skips_none():
    base = Settings()
    assert base.with_overrides(cap=None, budget=None) is base
    changed = base.with_overrides(cap=5, format="compact")
    assert (changed.cap, changed.format, changed.budget) == (5, "compact", DEFAULT_BUDGET)
    with pytest.raises(ValueError):
        base.with_overrides(cap=0)


def test_load_settings_top_level(tmp_path):
    path = tmp_path / "qfit.toml"
    path.write_text("cap = 4\ndual_cap = 2\n")
    settings = load_settings(path)
    assert (settings.cap, settings.dual_cap) == (4, 2)


def test_load_settings_table(tmp_path):
    path = tmp_path / "qfit.toml"
    path.write_text('[qfit]\nformat = "compact"\ncheck_bound = 0\n')
    settings = load_settings(str(path))
    assert settings.format == "compact"
    assert settings.check_bound == 0


def test_load_settings_invalid_toml(tmp_path):
    path = tmp_path / "qfit.toml"
    path.write_text("cap = = 4\n")
    with pytest.raises(ValueError, match="Invalid config file"):
        load_settings(path)


def test_get_setting_known():
    setting = get_setting("CAP")  # case-insensitive
    assert setting.name == "cap"
    assert "cap" in list_settings()


def test_get_setting_unknown():
    with pytest.raises(KeyError):
        get_setting("colour")


def test_setting_validation():
    setting = Setting(name="n", param_type=int, help_text="A count", validator=lambda v: v > 1)
    assert setting.validate(2) is True
    assert setting.validate(1) is False
    assert setting.validate("2") is False
    assert setting.validate(False) is False
    assert Setting(name="s", param_type=str, help_text="Text").validate("x") is True


def test_registry_override():
    strict = Setting(name="cap", param_type=int, help_text="Cap", default=2, validator=lambda v: v <= 2)
    with patch.dict(_SETTINGS_REGISTRY, {"cap": strict}):
        with pytest.raises(ValueError):
            Settings.from_mapping({"cap": 3})
        assert Settings.from_mapping({"cap": 2}).cap == 2
    assert Settings.from_mapping({"cap": 3}).cap == 3
