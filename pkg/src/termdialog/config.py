"""Pipeline configuration: YAML file with nested sections, merged over defaults."""

from __future__ import annotations

import copy
from pathlib import Path

import yaml

from .model.network import ModelConfig
from .model.training import DESK_TRAIN, OVERFIT_MODEL, OVERFIT_TRAIN, TrainConfig


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "paths": {
        "raw": None,
        "lexicon": None,
        "out_dir": "out",
        "train": None,
        "val": None,
        "test": None,
    },
    "split": {"ratios": [0.9, 0.05, 0.05], "seed": 0},
    "filter": {"min_tokens": 2, "max_src_tokens": 512, "max_tgt_tokens": 512},
    "vocab": {"min_freq": 1},
    "model": {},
    "train": {"preset": "desk"},
    "decode": {"strategy": "greedy", "beam_size": 4, "max_new": 64},
    "threads": 1,
}

PRESETS = {
    "full": ({}, {}),
    "desk": (DESK_TRAIN, {}),
    "overfit": (OVERFIT_TRAIN, OVERFIT_MODEL),
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(out.get(key), dict) and isinstance(value, dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad YAML in {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
        cfg = _merge(cfg, loaded)
        base = Path(path).parent
        for key, value in cfg["paths"].items():
            if value is not None and key in loaded.get("paths", {}) and not Path(value).is_absolute():
                cfg["paths"][key] = str(base / value)
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def require(cfg: dict, section: str, key: str, must_exist: bool = True):
    value = cfg.get(section, {}).get(key)
    if value is None:
        raise ConfigError(f"missing config key {section}.{key}")
    if must_exist and not Path(value).exists():
        raise ConfigError(f"{section}.{key}: {value} does not exist")
    return value


def model_and_train_configs(cfg: dict) -> tuple[ModelConfig, TrainConfig]:
    train = dict(cfg.get("train", {}))
    preset = train.pop("preset", "desk")
    if preset not in PRESETS:
        raise ConfigError(f"unknown training preset {preset!r} (choose from {sorted(PRESETS)})")
    t_over, m_over = PRESETS[preset]
    try:
        mcfg = ModelConfig(**{**m_over, **cfg.get("model", {})})
        tcfg = TrainConfig(**{**t_over, **train})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad model/train option: {exc}") from exc
    return mcfg, tcfg


def dump_config(cfg: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=True)
