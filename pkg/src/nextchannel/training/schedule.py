"""Linear warm-up followed by cosine annealing, evaluated per epoch."""

from __future__ import annotations

import math


def warmup_cosine_lr(epoch: int, warmup_epochs: int, total_epochs: int, peak_lr: float) -> float:
    """lr at ``epoch`` (0-based): ramp (e+1)/warmup * peak during warm-up,
    then peak * 0.5 * (1 + cos(pi * (e - warmup) / (total - warmup)))."""
    if not 0 <= epoch < total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {total_epochs})")
    if epoch < warmup_epochs:
        return peak_lr * (epoch + 1) / warmup_epochs
    span = total_epochs - warmup_epochs
    return peak_lr * 0.5 * (1.0 + math.cos(math.pi * (epoch - warmup_epochs) / span))


def lr_schedule(epoch: int, config) -> float:
    """Schedule under a TrainConfig-like object."""
    return warmup_cosine_lr(epoch, config.warmup_epochs, config.epochs, config.peak_lr)
