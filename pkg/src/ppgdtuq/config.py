"""Pipeline configuration: YAML file sections with defaults and flag overrides."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .classifier import ClassifierConfig
from .errors import ConfigError
from .gan import GanTrainConfig
from .signals import CLAMP_HI, CLAMP_LO, NOISE_SIGMA, SynthConfig


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float = NOISE_SIGMA
    clamp_lo: float = CLAMP_LO
    clamp_hi: float = CLAMP_HI


@dataclass(frozen=True)
class SplitSizes:
    # records per class
    train: int = 500
    validation: int = 50
    test: int = 400


@dataclass(frozen=True)
class BaselineConfig:
    cutoff_hz: float = 4.0
    num_taps: int = 65
    movavg_window: int = 5


@dataclass(frozen=True)
class EvalConfig:
    bins: int = 10
    keep_fraction: float = 0.75
    level: float = 0.8


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    sizes: SplitSizes = field(default_factory=SplitSizes)
    synth: SynthConfig = field(default_factory=SynthConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    gan: GanTrainConfig = field(default_factory=lambda: GanTrainConfig(max_epochs=8))
    classifier: ClassifierConfig = field(default_factory=lambda: ClassifierConfig(epochs=100))
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    denoiser: str = "gan"


def derive_seed(seed: int, *keys) -> int:
    """Independent 63-bit seed for a (seed, stage, ...) path."""
    words = [int(seed) & 0xFFFFFFFF]
    for k in keys:
        if isinstance(k, str):
            k = int.from_bytes(hashlib.sha256(k.encode()).digest()[:4], "little")
        words.append(int(k) & 0xFFFFFFFF)
    state = np.random.SeedSequence(words).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def _build(cls, data, path):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{path}: unknown key {key!r}")
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


_SECTIONS = {
    "sizes": SplitSizes,
    "synth": SynthConfig,
    "noise": NoiseConfig,
    "baseline": BaselineConfig,
    "gan": GanTrainConfig,
    "classifier": ClassifierConfig,
    "evaluation": EvalConfig,
}


def config_from_dict(data: dict) -> PipelineConfig:
    data = dict(data or {})
    base = PipelineConfig()
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            default = getattr(base, name)
            merged = {**dataclasses.asdict(default), **(data.pop(name) or {})}
            kwargs[name] = _build(cls, merged, name)
    for key in ("seed", "denoiser"):
        if key in data:
            kwargs[key] = data.pop(key)
    if data:
        raise ConfigError(f"unknown top-level keys {sorted(data)}")
    cfg = dataclasses.replace(base, **kwargs)
    if cfg.denoiser not in ("fir", "movavg", "gan"):
        raise ConfigError(f"denoiser must be fir, movavg or gan, got {cfg.denoiser!r}")
    return cfg


def load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data or {})


def config_to_dict(cfg: PipelineConfig) -> dict:
    def plain(v):
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        if isinstance(v, dict):
            return {k: plain(x) for k, x in v.items()}
        return v

    return plain(dataclasses.asdict(cfg))
