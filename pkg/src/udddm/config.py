"""Run configuration: YAML file with one section per module.

Unknown keys anywhere are rejected. Precedence is CLI flag > file > default.
See ``configs/schema.yaml`` for every key with its default.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path

import yaml

from udddm.evalkit import DatasetSpec
from udddm.network import NetworkConfig
from udddm.trainer import ScheduleConfig, TrainConfig


class ConfigError(ValueError):
    """Malformed configuration (unknown key, wrong type, missing seed...)."""


@dataclass
class SampleConfig:
    steps: int = 1
    count: int = 10000
    seed: int = 1
    record_trajectory: bool = False
    use_ema: bool = True


@dataclass
class VerifyConfig:
    checks: tuple = ("uniqueness", "bilipschitz", "ode")
    density: str = "gaussian"
    mean: float = 0.0
    std: float = 0.5
    dim: int = 2
    trials: int = 100
    eps: float = 1e-3
    pairs: int = 1000
    t_start: int | None = None
    t_end: float = 1.0
    score_scale: float = 1.0
    seed: int = 0


@dataclass
class EvalConfig:
    steps: tuple = (1, 2, 10)
    count: int = 10000
    projections: int = 128
    seed: int = 3
    bypass_model: bool = False


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    sample: SampleConfig = field(default_factory=SampleConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    output_dir: str = "runs/default"
    checkpoint_every: int = 0
    buffer_backing: str = "memory"


TUPLE_FIELDS = {"hidden_dims", "adam_betas", "snapshot_epochs", "checks", "steps"}


def _to_plain(obj):
    if is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    return obj


def _build(cls, data, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"section {where or '<root>'} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or '<root>'}: {', '.join(unknown)}")
    defaults = cls()
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        value = data[name]
        default = getattr(defaults, name)
        if is_dataclass(default):
            value = _build(type(default), value, f"{where}.{name}".lstrip("."))
        elif name in TUPLE_FIELDS and isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid values in {where or '<root>'}: {exc}") from exc


def train_config_to_dict(config: TrainConfig) -> dict:
    return _to_plain(config)


def train_config_from_dict(data: dict) -> TrainConfig:
    return _build(TrainConfig, data, "train")


def run_config_to_dict(config: RunConfig) -> dict:
    return _to_plain(config)


def run_config_from_dict(data: dict, require_seed: bool = True) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    train_section = data.get("train")
    if require_seed and not (isinstance(train_section, dict) and "seed" in train_section):
        raise ConfigError("train.seed is required (no implicit seeds)")
    return _build(RunConfig, data, "")


def load_config(path, require_seed: bool = True) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return run_config_from_dict(data or {}, require_seed)


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(run_config_to_dict(config), sort_keys=False)


def apply_overrides(config: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply ``dotted.key=value`` overrides (values parsed as YAML scalars)."""
    data = run_config_to_dict(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"unknown config section {p!r} in {key!r}")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = yaml.safe_load(raw)
    return run_config_from_dict(data, require_seed=False)


__all__ = [
    "ConfigError", "RunConfig", "SampleConfig", "VerifyConfig", "EvalConfig",
    "ScheduleConfig", "TrainConfig", "NetworkConfig", "DatasetSpec",
    "load_config", "dump_config", "apply_overrides",
]
