"""Optimizer and learning-rate schedule builders."""
import logging
import math
from typing import Iterable

import torch
from torch.optim.lr_scheduler import LambdaLR

from ..config.base_config import OptimizerConfig

logger = logging.getLogger(__name__)


def build_optimizer(params: Iterable[torch.nn.Parameter], cfg: OptimizerConfig) -> torch.optim.Optimizer:
    """Instantiate the optimizer named in ``cfg``."""
    if cfg.name == "sgd":
        return torch.optim.SGD(params, lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
    if cfg.name == "adam":
        return torch.optim.Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    raise ValueError(f"Unknown optimizer: {cfg.name}")


def lr_factor(step: int, total_steps: int, warmup_steps: int, schedule: str) -> float:
    """Multiplier of the base learning rate at a 0-based optimizer step.

    Linear warm-up over ``warmup_steps`` followed by half-cosine decay to 0
    over the remaining steps, or a constant rate.
    """
    if warmup_steps > 0 and step < warmup_steps:
        return (step + 1) / warmup_steps
    if schedule == "constant":
        return 1.0
    decay_steps = max(1, total_steps - warmup_steps)
    progress = min(1.0, (step - warmup_steps) / decay_steps)
    return 0.5 * (1.0 + math.cos(math.pi * progress))


def build_scheduler(optimizer: torch.optim.Optimizer, cfg: OptimizerConfig,
                    epochs: int, steps_per_epoch: int) -> LambdaLR:
    """Per-step schedule covering ``epochs`` epochs of ``steps_per_epoch`` steps."""
    total_steps = max(1, epochs * steps_per_epoch)
    warmup_steps = min(cfg.warmup_epochs * steps_per_epoch, total_steps)
    if cfg.warmup_epochs >= epochs and cfg.warmup_epochs > 0:
        logger.warning(f"warmup_epochs={cfg.warmup_epochs} covers the whole run of {epochs} epochs")
    return LambdaLR(
        optimizer,
        lambda step: lr_factor(step, total_steps, warmup_steps, cfg.schedule),
    )
