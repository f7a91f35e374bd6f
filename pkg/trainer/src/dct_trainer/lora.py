"""Low-rank adapters over frozen linear layers.

A wrapped layer computes ``base(x) + (alpha / rank) * B A dropout(x)`` with
``A`` Gaussian-initialized and ``B`` zero-initialized, so training starts
from the base model's function exactly. Only A and B receive gradients; the
checkpoint holds nothing else.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from torch import nn


class LoRALinear(nn.Module):
    def __init__(self, base: nn.Linear, rank: int, alpha: float, dropout: float):
        super().__init__()
        self.base = base
        self.rank = rank
        self.scaling = alpha / rank
        self.dropout = nn.Dropout(dropout)
        self.lora_a = nn.Parameter(torch.randn(rank, base.in_features) * 0.02)
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        update = self.dropout(x) @ self.lora_a.T @ self.lora_b.T
        return self.base(x) + self.scaling * update


def apply_adapters(model: nn.Module, rank: int, alpha: float, dropout: float,
                   target_names: tuple[str, ...]) -> int:
    """Wrap every targeted nn.Linear in place; returns how many were wrapped."""
    wrapped = 0
    for module in list(model.modules()):
        for name, child in list(module.named_children()):
            if isinstance(child, nn.Linear) and name in target_names:
                setattr(module, name, LoRALinear(child, rank, alpha, dropout))
                wrapped += 1
    if wrapped == 0:
        raise ValueError(f"no linear layers matched target names {target_names}")
    return wrapped


def mark_only_adapters_trainable(model: nn.Module) -> tuple[int, int]:
    """Freeze everything except adapter parameters.

    Returns (trainable parameter count, total parameter count).
    """
    trainable = 0
    total = 0
    for name, parameter in model.named_parameters():
        is_adapter = "lora_a" in name or "lora_b" in name
        parameter.requires_grad_(is_adapter)
        total += parameter.numel()
        if is_adapter:
            trainable += parameter.numel()
    return trainable, total


def adapter_state_dict(model: nn.Module) -> dict[str, torch.Tensor]:
    return {name: tensor for name, tensor in model.state_dict().items()
            if "lora_a" in name or "lora_b" in name}


def save_adapter(model: nn.Module, directory: str | Path, config_snapshot: dict) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(adapter_state_dict(model), directory / "adapter_weights.pt")
    (directory / "adapter_config.json").write_text(
        json.dumps(config_snapshot, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return directory


def load_adapter(model: nn.Module, directory: str | Path) -> None:
    """Load adapter weights into a model already wrapped by apply_adapters."""
    state = torch.load(Path(directory) / "adapter_weights.pt",
                       map_location="cpu", weights_only=True)
    missing, unexpected = model.load_state_dict(state, strict=False)
    if unexpected:
        raise ValueError(f"unexpected adapter tensors: {unexpected}")
    adapter_keys = [k for k in missing if "lora_" in k]
    if adapter_keys:
        raise ValueError(f"adapter tensors missing from checkpoint: {adapter_keys}")
