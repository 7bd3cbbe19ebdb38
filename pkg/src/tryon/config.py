"""Pipeline configuration: schema, TOML round-trip and content hashing."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "PipelineConfig"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    """Hyperparameters shared across training and inference stages.

    Defaults follow the training recipe this artifact reproduces: 40 epochs
    of Adam(beta1=0.5, beta2=0.999) at lr 2e-4, clips of 8..60 frames, body
    map network at 512x384 and garment synthesis at 576x432. The desk
    resolution is a 4:3 miniature used for CPU-scale runs and tests.
    """

    bodymap_resolution: tuple[int, int] = (512, 384)
    regarsyn_resolution: tuple[int, int] = (576, 432)
    desk_resolution: tuple[int, int] = (96, 72)
    epochs: int = 40
    learning_rate: float = 2e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    clip_len_min: int = 8
    clip_len_max: int = 60
    residual_blocks: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "bodymap_resolution", tuple(self.bodymap_resolution))
        object.__setattr__(self, "regarsyn_resolution", tuple(self.regarsyn_resolution))
        object.__setattr__(self, "desk_resolution", tuple(self.desk_resolution))
        if self.clip_len_min < 1:
            raise ConfigError(f"clip_len_min must be >= 1, got {self.clip_len_min}")
        if self.clip_len_min > self.clip_len_max:
            raise ConfigError(
                f"clip_len_min {self.clip_len_min} exceeds clip_len_max {self.clip_len_max}"
            )
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.residual_blocks < 1:
            raise ConfigError("residual_blocks must be >= 1")
        for name in ("bodymap_resolution", "regarsyn_resolution", "desk_resolution"):
            res = getattr(self, name)
            if len(res) != 2 or any(int(v) % 8 for v in res):
                raise ConfigError(f"{name} must be a (height, width) pair divisible by 8, got {res}")

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("bodymap_resolution", "regarsyn_resolution", "desk_resolution"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def content_hash(self) -> str:
        """Stable hash of the configuration, recorded in checkpoints."""
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def to_toml(self) -> str:
        # Flat schema; a hand-rolled writer keeps the dependency list short.
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, list):
                lines.append(f"{key} = [{', '.join(str(int(v)) for v in value)}]")
            elif isinstance(value, float):
                lines.append(f"{key} = {value!r}")
            else:
                lines.append(f"{key} = {int(value)}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_toml())

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def replace(self, **kwargs) -> "PipelineConfig":
        d = self.to_dict()
        d.update(kwargs)
        return self.from_dict(d)
