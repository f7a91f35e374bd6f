"""The training loop: fixed-iteration adapter fine-tuning with loss logging.

Maximizes the log-likelihood of every record text in the dataset file (the
pipeline already applied its emission rules; nothing is re-filtered here).
Runs for the configured number of epochs rather than to convergence. AdamW
with torch's default weight decay (recorded in the log header) and a linear
schedule: ramp over ``warmup_steps``, then decay to zero.

Determinism: given a fixed ``seed`` the run is deterministic on CPU to the
extent torch guarantees it; the loss log records enough to compare runs.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import torch

from .config import TrainerConfig, config_to_dict
from .data import load_records, make_loader
from .lora import apply_adapters, mark_only_adapters_trainable, save_adapter
from .model import build_base

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    adapter_dir: Path
    loss_log: Path
    epoch_mean_losses: list[float]
    steps: int


def _linear_schedule(optimizer, warmup_steps: int, total_steps: int):
    def factor(step: int) -> float:
        if warmup_steps and step < warmup_steps:
            return (step + 1) / warmup_steps
        remaining = max(total_steps - step, 1)
        span = max(total_steps - warmup_steps, 1)
        return remaining / span

    return torch.optim.lr_scheduler.LambdaLR(optimizer, factor)


def train(config: TrainerConfig) -> TrainResult:
    config.validate()
    torch.manual_seed(config.seed)

    records = load_records(config.dataset_path)
    model = build_base(config.base_model, seed=config.seed)
    n_wrapped = apply_adapters(model, config.adapter_rank, config.adapter_alpha,
                               config.adapter_dropout, config.target_modules)
    trainable, total = mark_only_adapters_trainable(model)
    log.info("adapters on %d layer(s): %d trainable of %d parameters (%.2f%%)",
             n_wrapped, trainable, total, 100 * trainable / total)

    generator = torch.Generator().manual_seed(config.seed)
    loader, balanced = make_loader(records, config, generator)
    steps_per_epoch = len(loader)
    total_steps = steps_per_epoch * config.epochs

    optimizer = torch.optim.AdamW(
        [p for p in model.parameters() if p.requires_grad], lr=config.learning_rate)
    weight_decay = optimizer.defaults["weight_decay"]
    scheduler = _linear_schedule(optimizer, config.warmup_steps, total_steps)

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    loss_log_path = out_dir / "loss.jsonl"

    model.train()
    step = 0
    epoch_means: list[float] = []
    started = time.monotonic()
    with open(loss_log_path, "w", encoding="utf-8") as log_fh:
        header = {
            "config": config_to_dict(config),
            "n_records": len(records),
            "balanced_sampling": balanced,
            "adapter_layers": n_wrapped,
            "trainable_parameters": trainable,
            "total_parameters": total,
            "optimizer": "AdamW",
            "weight_decay": weight_decay,  # framework default, not pinned upstream
        }
        log_fh.write(json.dumps(header, sort_keys=True) + "\n")

        for epoch in range(config.epochs):
            epoch_loss = 0.0
            label_counts = {"true": 0, "false": 0}
            for input_ids, labels in loader:
                loss = model.loss(input_ids)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                scheduler.step()
                step += 1
                epoch_loss += loss.item()
                label_counts["true"] += int(labels.sum())
                label_counts["false"] += int((~labels).sum())
                log_fh.write(json.dumps({
                    "step": step, "epoch": epoch, "loss": round(loss.item(), 6),
                    "lr": scheduler.get_last_lr()[0],
                }, sort_keys=True) + "\n")
            mean = epoch_loss / steps_per_epoch
            epoch_means.append(mean)
            log_fh.write(json.dumps({
                "epoch": epoch, "mean_loss": round(mean, 6),
                "sampled_labels": label_counts,
            }, sort_keys=True) + "\n")
            log.info("epoch %d/%d: mean loss %.4f (labels %s)",
                     epoch + 1, config.epochs, mean, label_counts)

    adapter_dir = save_adapter(model, out_dir / "adapter", {
        **config_to_dict(config),
        "adapter_layers": n_wrapped,
        "trainable_parameters": trainable,
    })
    log.info("done in %.1fs: %d steps, adapter at %s",
             time.monotonic() - started, step, adapter_dir)
    return TrainResult(adapter_dir=adapter_dir, loss_log=loss_log_path,
                       epoch_mean_losses=epoch_means, steps=step)
