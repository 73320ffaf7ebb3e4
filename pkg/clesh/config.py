from __future__ import annotations

import dataclasses
import os
import typing
from typing import Any, Dict, Mapping, Optional

import json5

from .errors import ConfigError

DEFAULT_OUTPUT_DIR = "clesh_result"


@dataclasses.dataclass(frozen=True)
class Config:
    """Analysis hyperparameters and output controls.

    candidate_num_min/candidate_num_max bound the number of important
    features picked from the adjacent-significance cuts; manual_num, when
    set, overrides that choice. cont_bound is the number of unique values a
    feature must exceed to count as continuous. The three p_* values are
    the significance levels of feature selection, univariate analysis and
    interaction analysis.
    """

    candidate_num_min: int = 10
    candidate_num_max: int = 20
    p_feature_selection: float = 0.05
    cont_bound: int = 10
    manual_num: Optional[int] = None
    p_univariate: float = 0.05
    p_interaction: float = 0.05
    output_dir: str = DEFAULT_OUTPUT_DIR
    rng_seed: int = 0
    interaction_top_k: int = 1
    strict_paired_nonparametric: bool = False
    html: bool = False

    def __post_init__(self) -> None:
        for name in ("candidate_num_min", "candidate_num_max", "cont_bound"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.candidate_num_min > self.candidate_num_max:
            raise ConfigError(
                f"candidate_num_min ({self.candidate_num_min}) must not exceed "
                f"candidate_num_max ({self.candidate_num_max})"
            )
        for name in ("p_feature_selection", "p_univariate", "p_interaction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(
                    f"{name} must be strictly between 0 and 1, got {value}"
                )
        if self.manual_num is not None and self.manual_num < 1:
            raise ConfigError("manual_num must be a positive integer when set")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be an unsigned integer")
        if self.interaction_top_k < 1:
            raise ConfigError("interaction_top_k must be a positive integer")
        if not self.output_dir:
            raise ConfigError("output_dir must not be empty")

    def snapshot(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def config_keys() -> typing.List[str]:
    return [field.name for field in dataclasses.fields(Config)]


_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _coerce(key: str, value: Any) -> Any:
    hint = typing.get_type_hints(Config)[key]
    if hint is bool:
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in _TRUE:
            return True
        if text in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if key == "manual_num":
        if value is None or str(value).strip().lower() in ("", "none", "0"):
            return None
        hint = int
    if hint is int:
        if isinstance(value, bool):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        if number != int(number):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(number)
    if hint is float:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    return str(value)


def _normalize(raw: Mapping[str, Any], source: str) -> Dict[str, Any]:
    known = set(config_keys())
    out: Dict[str, Any] = {}
    for key, value in raw.items():
        name = str(key).strip().replace("-", "_")
        if name not in known:
            raise ConfigError(f"{source}: unknown configuration key {key!r}")
        out[name] = _coerce(name, value)
    return out


def _read_key_values(path: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}"
                )
            key, value = line.split("=", 1)
            key = key.strip()
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value.strip().strip("\"'")
    return values


def read_config_file(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise ConfigError(f"config file {path} does not exist")
    if os.path.splitext(path)[1].lower() in (".json5", ".json"):
        with open(path, encoding="utf-8") as f:
            data = json5.load(f)
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a flat object")
        for key, value in data.items():
            if isinstance(value, (dict, list)):
                raise ConfigError(f"{path}: key {key!r} must hold a scalar")
        return _normalize(data, path)
    return _normalize(_read_key_values(path), path)


def load_config(
    config_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Config:
    """defaults < config file < overrides"""
    values: Dict[str, Any] = {}
    if config_path:
        values.update(read_config_file(config_path))
    if overrides:
        values.update(_normalize(overrides, "overrides"))
    return Config(**values)
