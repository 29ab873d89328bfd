"""Run configuration: one YAML document, every key optional, unknown keys rejected."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .dataset import DEFAULT_TIMESTAMP_COLUMNS
from .errors import FlowcastError
from .importance import ForestConfig
from .lstm import TrainConfig


class ConfigError(FlowcastError, ValueError):
    pass


@dataclass
class DatasetSection:
    target_column: str | int | None = None
    train_fraction: float = 2 / 3
    seed: int = 0
    timestamp_columns: list[str] = field(default_factory=lambda: list(DEFAULT_TIMESTAMP_COLUMNS))


@dataclass
class ForestSection:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 5
    features_per_split: int | None = None


@dataclass
class ImportanceSection:
    threshold: float = 0.95


@dataclass
class WindowSection:
    mode: str = "block"
    n: int | None = None


@dataclass
class LstmSection:
    seq_len: int = 500
    hidden_dim: int = 100
    epochs: int = 50
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    shuffle: bool = False
    clip_norm: float | None = None


@dataclass
class TunerSection:
    workers: int = 1


@dataclass
class RunConfig:
    dataset: DatasetSection = field(default_factory=DatasetSection)
    forest: ForestSection = field(default_factory=ForestSection)
    importance: ImportanceSection = field(default_factory=ImportanceSection)
    window: WindowSection = field(default_factory=WindowSection)
    lstm: LstmSection = field(default_factory=LstmSection)
    tuner: TunerSection = field(default_factory=TunerSection)

    @property
    def seed(self) -> int:
        return self.dataset.seed

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            train_fraction=self.dataset.train_fraction,
            seed=self.seed,
            **dataclasses.asdict(self.lstm),
        )

    def forest_config(self) -> ForestConfig:
        return ForestConfig(seed=self.seed, **dataclasses.asdict(self.forest))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _sections():
    return {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(section, key: str, value):
    """Convert ``value`` to the declared type of ``section.key``.

    Strings (from ``--set`` or quoted YAML) are parsed; YAML alone would read
    ``1e-3`` as a string.
    """
    declared = {f.name: f.type for f in dataclasses.fields(section)}[key]
    if key == "target_column":
        return value
    if isinstance(value, str) and value.strip().lower() in ("null", "none", "~"):
        value = None
    if value is None:
        if "None" not in declared:
            raise ConfigError(f"{key} may not be null")
        return None
    base = declared.split("|")[0].strip()
    try:
        if base == "list[str]":
            if isinstance(value, str):
                return [v.strip() for v in value.split(",") if v.strip()]
            return [str(v) for v in value]
        if base == "bool":
            if isinstance(value, str):
                value = yaml.safe_load(value)
            if not isinstance(value, bool):
                raise ValueError
            return value
        if isinstance(value, bool):
            raise ValueError
        if base == "float":
            return float(value)
        if base == "int":
            number = float(value) if isinstance(value, str) else value
            if int(number) != number:
                raise ValueError
            return int(number)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}={value!r} is not a valid {base}") from None


def _apply(cfg: RunConfig, section_name: str, key: str, value) -> None:
    if section_name not in _sections():
        raise ConfigError(f"unknown config section {section_name!r}")
    section = getattr(cfg, section_name)
    names = {f.name for f in dataclasses.fields(section)}
    if key not in names:
        raise ConfigError(f"unknown config key {section_name}.{key}")
    setattr(section, key, _coerce(section, key, value))


def from_mapping(data: dict | None) -> RunConfig:
    cfg = RunConfig()
    for section_name, body in (data or {}).items():
        if not isinstance(body, dict):
            raise ConfigError(f"config section {section_name!r} must be a mapping")
        for key, value in body.items():
            _apply(cfg, section_name, key, value)
    return cfg


def load_config(path=None, overrides=()) -> RunConfig:
    """Read ``path`` (YAML) if given, then apply ``section.key=value`` overrides."""
    data = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config document must be a mapping")
    cfg = from_mapping(data)
    for item in overrides:
        dotted, sep, value = item.partition("=")
        section_name, dot, key = dotted.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} is not section.key=value")
        _apply(cfg, section_name, key, value.strip())
    return cfg
