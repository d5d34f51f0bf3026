from __future__ import annotations

"""
Settings registry and configuration file loading.

Provides:
- Setting dataclass describing one tunable value (type, default, validator)
- Registry of supported settings (cap, budget, dual_cap, check_bound, format)
- Settings dataclass with validation and TOML loading

Intended usage:
    settings = load_settings("qfit.toml").with_overrides(cap=6)
    with search_budget(settings.budget):
        ...
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Union
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DEFAULT_CAP = 8
DEFAULT_BUDGET = 10_000_000
DEFAULT_DUAL_CAP = 3
DEFAULT_CHECK_BOUND = 2
FORMATS = ("pretty", "compact")


@dataclass(frozen=True)
class Setting:
    """Describes a configurable value."""
    name: str
    param_type: type
    help_text: str
    default: Any = None
    validator: Callable[[Any], bool] | None = None

    def validate(self, value: Any) -> bool:
        # bool is an int subclass; reject it for numeric settings
        if isinstance(value, bool) and self.param_type is not bool:
            return False
        if not isinstance(value, self.param_type):
            return False
        if self.validator:
            return self.validator(value)
        return True


_SETTINGS_REGISTRY: Dict[str, Setting] = {
    "cap": Setting(
        name="cap",
        param_type=int,
        help_text="Size or depth cap for bounded searches",
        default=DEFAULT_CAP,
        validator=lambda v: v >= 1,
    ),
    "budget": Setting(
        name="budget",
        param_type=int,
        help_text="Node budget for every homomorphism search",
        default=DEFAULT_BUDGET,
        validator=lambda v: v >= 1,
    ),
    "dual_cap": Setting(
        name="dual_cap",
        param_type=int,
        help_text="Maximum number of values of dual members (unset: derived from each obstruction)",
        default=None,
        validator=lambda v: v >= 1,
    ),
    "check_bound": Setting(
        name="check_bound",
        param_type=int,
        help_text="Value bound for oracle validation of constructed dualities (0 disables)",
        default=DEFAULT_CHECK_BOUND,
        validator=lambda v: v >= 0,
    ),
    "format": Setting(
        name="format",
        param_type=str,
        help_text="Output document layout",
        default="pretty",
        validator=lambda v: v in FORMATS,
    ),
}


@dataclass(frozen=True)
class Settings:
    cap: int = DEFAULT_CAP
    budget: int = DEFAULT_BUDGET
    dual_cap: Optional[int] = None
    check_bound: int = DEFAULT_CHECK_BOUND
    format: str = "pretty"

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "Settings":
        """Validate a raw mapping (e.g. a parsed TOML table) into Settings."""
        checked: Dict[str, Any] = {}
        for name, value in values.items():
            setting = _SETTINGS_REGISTRY.get(name)
            if setting is None:
                raise ValueError(f"Unknown setting: {name}")
            if not setting.validate(value):
                raise ValueError(
                    f"Invalid value for setting '{name}': {value!r} "
                    f"(expected type: {setting.param_type.__name__})"
                )
            checked[name] = value
        return cls(**checked)

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Return a copy with every non-None override applied and validated."""
        given = {k: v for k, v in overrides.items() if v is not None}
        if not given:
            return self
        Settings.from_mapping(given)
        return replace(self, **given)


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    """Read settings from a TOML file; a missing path yields the defaults.

    The values may sit at the top level or inside a ``[qfit]`` table.
    """
    if path is None:
        return Settings()
    with open(path, "rb") as handle:
        try:
            data = tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ValueError(f"Invalid config file {str(path)!r}: {exc}") from exc
    table = data.get("qfit", data)
    if not isinstance(table, dict):
        raise ValueError(f"Invalid config file {str(path)!r}: [qfit] must be a table")
    return Settings.from_mapping(table)


def get_setting(name: str) -> Setting:
    """Lookup a setting description by name (case-insensitive)."""
    key = name.lower()
    if key not in _SETTINGS_REGISTRY:
        raise KeyError(f"Unknown setting: {name!r}. Supported: {', '.join(sorted(_SETTINGS_REGISTRY))}")
    return _SETTINGS_REGISTRY[key]


def list_settings() -> List[str]:
    """List supported setting names."""
    return sorted(_SETTINGS_REGISTRY.keys())
