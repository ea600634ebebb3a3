"""Training configuration and its key=value file format.

Config files are UTF-8 text: one ``key = value`` pair per line, ``#``
comments and blank lines ignored. Keys match TrainConfig field names.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    embedding_dim: int = 64
    hidden_size: int = 200
    mlp_size: int = 500
    learning_rate: float = 1e-3
    max_epochs: int = 100
    patience: int = 20
    batch_size: int = 16
    max_span_len: int = 7
    dropout: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("embedding_dim", "hidden_size", "mlp_size", "max_epochs", "batch_size", "max_span_len"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.patience < 0:
            raise ConfigError(f"patience must be non-negative, got {self.patience}")
        if self.patience > self.max_epochs:
            raise ConfigError(
                f"patience ({self.patience}) must not exceed max_epochs ({self.max_epochs})"
            )

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "TrainConfig":
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            caster = int if types[key] == "int" else float
            try:
                kwargs[key] = caster(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "TrainConfig":
        mapping: dict[str, str] = {}
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise ConfigError(f"{path}:{line_no}: expected key = value, got {line!r}")
                key, _, value = stripped.partition("=")
                mapping[key.strip()] = value.strip()
        return cls.from_mapping(mapping)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
