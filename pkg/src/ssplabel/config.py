"""JSON (de)serialization of the run configuration.

A config file is a JSON object with optional ``scene``, ``assign`` and
``extract`` sections whose keys mirror the dataclass fields. Unknown keys are
rejected so typos fail loudly.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .assignment import AssignConfig
from .errors import ConfigError
from .extraction import ExtractConfig
from .partition import GrowConfig
from .synth import SceneConfig

SECTIONS = ("scene", "assign", "extract")


def _check_keys(cls, d: dict, where: str) -> None:
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def grow_from_dict(d: dict, base: GrowConfig) -> GrowConfig:
    _check_keys(GrowConfig, d, "grow")
    return dataclasses.replace(base, **d)


def assign_from_dict(d: dict, base: AssignConfig = AssignConfig()) -> AssignConfig:
    d = dict(d)
    _check_keys(AssignConfig, d, "assign")
    if "grow" in d:
        d["grow"] = grow_from_dict(d["grow"], base.grow)
    return dataclasses.replace(base, **d)


def extract_from_dict(d: dict, base: ExtractConfig = ExtractConfig()) -> ExtractConfig:
    d = dict(d)
    _check_keys(ExtractConfig, d, "extract")
    if "grow" in d:
        d["grow"] = grow_from_dict(d["grow"], base.grow)
    if "incompatible_pairs" in d:
        d["incompatible_pairs"] = frozenset(frozenset(p) for p in d["incompatible_pairs"])
    if "strategy_table" in d:
        d["strategy_table"] = {int(k): v for k, v in d["strategy_table"].items()}
    return dataclasses.replace(base, **d)


def scene_from_dict(d: dict, base: SceneConfig | None = None) -> SceneConfig:
    _check_keys(SceneConfig, d, "scene")
    merged = base.to_dict() if base is not None else {}
    merged.update(d)
    return SceneConfig.from_dict(merged)


def assign_to_dict(cfg: AssignConfig) -> dict:
    return dataclasses.asdict(cfg)


def extract_to_dict(cfg: ExtractConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["incompatible_pairs"] = sorted(sorted(p) for p in cfg.incompatible_pairs)
    d["strategy_table"] = {str(k): v for k, v in sorted(cfg.strategy_table.items())}
    return d


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    return data
