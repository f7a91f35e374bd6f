"""Trainer configuration.

Defaults mirror the adapter fine-tuning recipe: rank 8, alpha 32, dropout
0.1, learning rate 1e-4, batch size 4, 30 epochs, AdamW with a linear
schedule and 100 warmup steps. Epoch presets: 30 by default, 60 for
supervised verification runs, 1 for transductive runs (those datasets are
much larger).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

EPOCH_PRESETS = {
    "default": 30,
    "supervised-verification": 60,
    "transductive": 1,
}

#: Linear submodules that receive low-rank adapters.
DEFAULT_TARGETS = ("q_proj", "v_proj", "fc1", "fc2")


class ConfigError(Exception):
    pass


@dataclass
class TrainerConfig:
    dataset_path: str
    output_dir: str = "trainer-out"
    base_model: str = "tiny-64x2"  # "tiny-<d_model>x<n_layers>" or a base checkpoint path
    adapter_rank: int = 8
    adapter_alpha: float = 32.0
    adapter_dropout: float = 0.1
    learning_rate: float = 1e-4
    batch_size: int = 4
    epochs: int = EPOCH_PRESETS["default"]
    warmup_steps: int = 100
    weighted_sampling: bool = False
    target_modules: tuple[str, ...] = DEFAULT_TARGETS
    max_length: int = 128
    seed: int = 0

    def validate(self) -> None:
        positive = ("adapter_rank", "adapter_alpha", "learning_rate",
                    "batch_size", "epochs", "max_length")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.adapter_dropout < 0 or self.adapter_dropout >= 1:
            raise ConfigError(f"adapter_dropout must be in [0, 1), got {self.adapter_dropout}")
        if self.warmup_steps < 0:
            raise ConfigError(f"warmup_steps must be >= 0, got {self.warmup_steps}")
        if not self.dataset_path:
            raise ConfigError("dataset_path is required")


def config_from_dict(data: dict) -> TrainerConfig:
    known = {f.name for f in fields(TrainerConfig)}
    unknown = set(data) - known - {"epochs_preset"}
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    values = {k: v for k, v in data.items() if k in known}
    if "epochs_preset" in data:
        preset = data["epochs_preset"]
        if preset not in EPOCH_PRESETS:
            raise ConfigError(f"unknown epochs_preset {preset!r} "
                              f"(choose from {sorted(EPOCH_PRESETS)})")
        values.setdefault("epochs", EPOCH_PRESETS[preset])
    if "target_modules" in values:
        values["target_modules"] = tuple(values["target_modules"])
    try:
        config = TrainerConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def config_from_file(path: str | Path) -> TrainerConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def config_to_dict(config: TrainerConfig) -> dict:
    return {
        "dataset_path": config.dataset_path,
        "output_dir": config.output_dir,
        "base_model": config.base_model,
        "adapter_rank": config.adapter_rank,
        "adapter_alpha": config.adapter_alpha,
        "adapter_dropout": config.adapter_dropout,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "warmup_steps": config.warmup_steps,
        "weighted_sampling": config.weighted_sampling,
        "target_modules": list(config.target_modules),
        "max_length": config.max_length,
        "seed": config.seed,
    }
