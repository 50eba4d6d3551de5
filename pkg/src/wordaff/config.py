"""Pipeline configuration: defaults, flat key=value files, and overrides.

Config files are plain text, one ``section.key=value`` per line, with ``#``
comments. Sections map to the per-stage config dataclasses; a top-level
``seed`` re-derives every stage seed deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .clustering import ClusterConfig
from .constraints import ConstraintConfig
from .features import FeatureConfig
from .siamese import TrainConfig


class ConfigError(ValueError):
    """Malformed config file or unknown option."""


@dataclass
class LineConfig:
    threshold: float = 0.1
    overlap_min: float = 0.5

    def validate(self):
        if self.threshold <= 0:
            raise ConfigError("lines.threshold must be > 0")
        if not (0 < self.overlap_min <= 1):
            raise ConfigError("lines.overlap_min must be in (0, 1]")


@dataclass
class ModelConfig:
    latent_dim: int = 20
    hidden_dims: tuple[int, ...] = (50, 2000)

    def validate(self):
        if self.latent_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ConfigError("model dims must be >= 1")


_SECTIONS = {
    "lines": LineConfig,
    "features": FeatureConfig,
    "constraints": ConstraintConfig,
    "train": TrainConfig,
    "cluster": ClusterConfig,
    "model": ModelConfig,
}


@dataclass
class PipelineConfig:
    seed: int = 0
    lines: LineConfig = field(default_factory=LineConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    constraints: ConstraintConfig = field(default_factory=ConstraintConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    model: ModelConfig = field(default_factory=ModelConfig)

    def validate(self) -> "PipelineConfig":
        self.lines.validate()
        self.features.validate()
        self.constraints.validate()
        self.train.validate()
        self.cluster.validate()
        self.model.validate()
        return self

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Re-derive every stage seed from one master seed."""
        return replace(
            self,
            seed=seed,
            features=replace(self.features, noise_seed=seed + 1),
            constraints=replace(self.constraints, rng_seed=seed + 2),
            train=replace(self.train, rng_seed=seed + 3),
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"seed": self.seed}
        for name in _SECTIONS:
            section = getattr(self, name)
            out[name] = {f.name: _plain(getattr(section, f.name)) for f in fields(section)}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        cfg = cls()
        if "seed" in data:
            cfg = cfg.with_seed(int(data["seed"]))
        for name, values in data.items():
            if name == "seed":
                continue
            if name not in _SECTIONS:
                raise ConfigError(f"unknown config section: {name}")
            if not isinstance(values, dict):
                raise ConfigError(f"section {name} must be an object")
            section = getattr(cfg, name)
            for key, value in values.items():
                section = _set_field(section, name, key, value)
            cfg = replace(cfg, **{name: section})
        return cfg.validate()

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        data: dict[str, Any] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "seed":
                data["seed"] = value
            elif "." in key:
                section, field_name = key.split(".", 1)
                data.setdefault(section, {})[field_name] = value
            else:
                raise ConfigError(f"{path}:{lineno}: key must be 'seed' or 'section.key'")
        return cls.from_dict(data)

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        """Apply a nested override dict (same shape as ``to_dict``).

        A ``seed`` override re-derives the stage seeds first, so explicit
        per-stage seeds in the same override dict still win.
        """
        cfg = self
        if "seed" in overrides:
            try:
                cfg = cfg.with_seed(int(overrides["seed"]))
            except (TypeError, ValueError):
                raise ConfigError(f"seed must be an integer, got {overrides['seed']!r}") from None
        for key, value in overrides.items():
            if key == "seed":
                continue
            if key not in _SECTIONS:
                raise ConfigError(f"unknown config section: {key}")
            if not isinstance(value, dict):
                raise ConfigError(f"override {key!r} must be 'seed' or a section object")
            section = getattr(cfg, key)
            for k, v in value.items():
                section = _set_field(section, key, k, v)
            cfg = replace(cfg, **{key: section})
        return cfg.validate()


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return list(value)
    return value


def _coerce(raw: Any, target: Any, where: str) -> Any:
    if isinstance(target, bool):
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("true", "1", "yes", "on"):
            return True
        if text in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{where}: expected boolean, got {raw!r}")
    if isinstance(target, int):
        try:
            return int(str(raw))
        except ValueError:
            raise ConfigError(f"{where}: expected integer, got {raw!r}") from None
    if isinstance(target, float):
        try:
            return float(str(raw))
        except ValueError:
            raise ConfigError(f"{where}: expected number, got {raw!r}") from None
    if isinstance(target, tuple):
        if isinstance(raw, (list, tuple)):
            return tuple(int(v) for v in raw)
        return tuple(int(part) for part in str(raw).split(",") if part.strip())
    return raw


def _set_field(section: Any, section_name: str, key: str, value: Any) -> Any:
    names = {f.name for f in fields(section)}
    if key not in names:
        raise ConfigError(f"unknown config key: {section_name}.{key}")
    current = getattr(section, key)
    return replace(section, **{key: _coerce(value, current, f"{section_name}.{key}")})
