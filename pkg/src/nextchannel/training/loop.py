"""Contrastive training loop: multi-crop views, NT-Xent, LARS, cosine schedule.

An "epoch" is a fixed number of sampled batches (default 1), matching the
view accounting of batch_patches * views_per_patch views per epoch. Patches
are intensity-normalized by a per-channel high-percentile scale computed
once from the training set and stored with the weights so inference sees
the same scale.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import torch
from torch import nn

from ..augment import AugmentConfig, make_view_batch
from ..container import read_container, write_container
from ..exceptions import (
    ConfigurationError,
    CorruptFileError,
    DataError,
    TrainingDivergedError,
)
from ..model import ModelConfig, NextChannelEncoder, build_encoder, save_weights
from .lars import Lars, split_decay_groups
from .loss import nt_xent_loss
from .schedule import lr_schedule

_STATE_KIND = "nextchannel-train-state"


@dataclass(frozen=True)
class TrainConfig:
    batch_patches: int = 768
    epochs: int = 5000
    warmup_epochs: int = 10
    peak_lr: float = 4.6
    momentum: float = 0.9
    weight_decay: float = 1e-6
    temperature: float = 0.5
    projection_hidden: Optional[int] = None  # None -> embed_dim
    projection_dim: int = 128
    trust_coefficient: float = 1.0
    batches_per_epoch: int = 1
    checkpoint_every: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("batch_patches", "epochs", "warmup_epochs", "projection_dim",
                     "batches_per_epoch", "checkpoint_every"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        for name in ("peak_lr", "temperature", "trust_coefficient"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.momentum < 0 or self.weight_decay < 0:
            raise ConfigurationError("momentum and weight_decay must be nonnegative")
        if self.warmup_epochs >= self.epochs:
            raise ConfigurationError("warmup_epochs must be smaller than epochs")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def training_plan(train_config: TrainConfig, aug_config: AugmentConfig) -> dict:
    """View arithmetic for a run: views per batch/epoch and in total."""
    views_per_batch = train_config.batch_patches * aug_config.views_per_patch
    views_per_epoch = views_per_batch * train_config.batches_per_epoch
    return {
        "views_per_patch": aug_config.views_per_patch,
        "views_per_batch": views_per_batch,
        "batches_per_epoch": train_config.batches_per_epoch,
        "views_per_epoch": views_per_epoch,
        "epochs": train_config.epochs,
        "total_views": views_per_epoch * train_config.epochs,
    }


def _make_optimizer(adapted, excluded, train_config: "TrainConfig") -> Lars:
    return Lars(
        [
            {"params": adapted},
            {"params": excluded, "lars_adapt": False, "weight_decay": 0.0},
        ],
        lr=train_config.peak_lr,
        momentum=train_config.momentum,
        weight_decay=train_config.weight_decay,
        trust_coefficient=train_config.trust_coefficient,
    )


class ProjectionHead(nn.Module):
    """Two-layer MLP used only by the contrastive loss; clustering consumes
    the pre-projection embedding."""

    def __init__(self, in_dim: int, hidden: int, out_dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden), nn.ReLU(), nn.Linear(hidden, out_dim)
        )

    def forward(self, x):
        return self.net(x)


def build_projection_head(model_config: ModelConfig, train_config: TrainConfig, seed: int) -> ProjectionHead:
    hidden = train_config.projection_hidden or model_config.embed_dim
    head = ProjectionHead(model_config.embed_dim, hidden, train_config.projection_dim)
    gen = torch.Generator().manual_seed(seed & 0xFFFFFFFFFFFFFFFF)
    with torch.no_grad():
        for mod in head.modules():
            if isinstance(mod, nn.Linear):
                mod.weight.normal_(0.0, math.sqrt(2.0 / mod.weight.shape[1]), generator=gen)
                mod.bias.zero_()
    return head


def compute_channel_scale(patches: np.ndarray, percentile: float = 99.9) -> np.ndarray:
    """Per-channel intensity divisor: the given percentile, floored at 1e-6."""
    arr = np.asarray(patches, dtype=np.float32)
    if arr.ndim != 4 or arr.shape[0] == 0:
        raise DataError(f"expected non-empty (M, S, S, C) patches, got {arr.shape}")
    scale = np.percentile(arr, percentile, axis=(0, 1, 2)).astype(np.float32)
    return np.maximum(scale, np.float32(1e-6))


@dataclass
class TrainState:
    """Counters, sampler rng, and loss tail; optimizer buffers and head
    weights are serialized next to it so a resumed run reproduces the next
    step bit-identically."""

    epoch: int = 0
    step: int = 0
    rng_state: dict = field(default_factory=dict)
    loss_tail: List[float] = field(default_factory=list)


def _ordered_params(encoder: NextChannelEncoder, head: ProjectionHead):
    for name, p in encoder.named_parameters():
        yield f"encoder/{name}", p
    for name, p in head.named_parameters():
        yield f"head/{name}", p


def save_train_state(path, state: TrainState, encoder, head, optimizer) -> None:
    tensors = {}
    for name, p in _ordered_params(encoder, head):
        buf = optimizer.state.get(p, {}).get("momentum_buffer")
        if buf is None:
            buf = torch.zeros_like(p)
        tensors[f"momentum/{name}"] = buf.detach().numpy()
    for name, p in head.named_parameters():
        tensors[f"head/{name}"] = p.detach().numpy()
    header = {
        "kind": _STATE_KIND,
        "epoch": state.epoch,
        "step": state.step,
        "rng_state": state.rng_state,
        "loss_tail": state.loss_tail,
    }
    write_container(path, header, tensors)


def load_train_state(path, encoder, head, optimizer) -> TrainState:
    header, tensors = read_container(path)
    if header.get("kind") != _STATE_KIND:
        raise CorruptFileError(f"{path}: not a train-state file")
    with torch.no_grad():
        for name, p in head.named_parameters():
            p.copy_(torch.from_numpy(tensors[f"head/{name}"]))
        for name, p in _ordered_params(encoder, head):
            buf = torch.from_numpy(tensors[f"momentum/{name}"])
            optimizer.state[p]["momentum_buffer"] = buf.clone()
    return TrainState(
        epoch=header["epoch"],
        step=header["step"],
        rng_state=header["rng_state"],
        loss_tail=list(header.get("loss_tail", [])),
    )


@dataclass
class TrainResult:
    encoder: NextChannelEncoder
    head: ProjectionHead
    channel_scale: np.ndarray
    log_rows: List[Tuple[int, float, float, float]]
    weights_path: Optional[Path]
    state_path: Optional[Path]


def _encode_view_batch(encoder, head, view_batch, channel_scale):
    """Forward all size-homogeneous sub-batches; returns normalized
    projections and the aligned pair index."""
    projections = []
    indices = []
    for size in view_batch.sizes:
        views, idx = view_batch.groups[size]
        x = torch.from_numpy(views / channel_scale).permute(0, 3, 1, 2).contiguous()
        _, emb = encoder(x)
        projections.append(head(emb))
        indices.append(torch.from_numpy(idx))
    proj = torch.cat(projections)
    if not torch.isfinite(proj).all():
        raise TrainingDivergedError("non-finite projections; last checkpoint retained")
    proj = proj / proj.norm(dim=1, keepdim=True).clamp_min(1e-12)
    return proj, torch.cat(indices)


def train(
    patches: np.ndarray,
    model_config: ModelConfig,
    train_config: TrainConfig,
    aug_config: AugmentConfig,
    out_dir=None,
    log_path=None,
    resume_from=None,
    stop_after_epochs: Optional[int] = None,
    config_hash: Optional[str] = None,
) -> TrainResult:
    """Train an encoder on (M, S, S, C) patches.

    Writes ``encoder.nxch`` plus periodic ``checkpoint.nxch`` /
    ``checkpoint.state.nxch`` under ``out_dir`` (when given) and an
    append-only CSV log (epoch, lr, loss, wall_time_s). On a non-finite
    loss or gradient the run halts with the last checkpoint retained.

    ``resume_from`` names a directory holding a checkpoint pair; the
    resumed run reproduces what an uninterrupted run would have done,
    bit for bit. ``stop_after_epochs`` ends the loop early (schedule and
    counters still follow the full config).
    """
    arr = np.asarray(patches, dtype=np.float32)
    if arr.ndim != 4 or arr.shape[0] == 0:
        raise DataError(f"training set must be non-empty (M, S, S, C), got {arr.shape}")
    if arr.shape[-1] != model_config.channels:
        raise ConfigurationError(
            f"patches have {arr.shape[-1]} channels, model expects {model_config.channels}"
        )
    if min(aug_config.crop_sizes) < model_config.min_input_size:
        raise ConfigurationError(
            f"crop size {min(aug_config.crop_sizes)} below model minimum "
            f"{model_config.min_input_size}"
        )

    rng = np.random.default_rng(np.random.SeedSequence(train_config.seed & 0xFFFFFFFFFFFFFFFF))
    if resume_from is not None:
        from ..model import load_weights

        resume_dir = Path(resume_from)
        encoder, channel_scale, _ = load_weights(
            resume_dir / "checkpoint.nxch", expected_config=model_config
        )
        head = build_projection_head(model_config, train_config, train_config.seed + 1)
        adapted, excluded = split_decay_groups([encoder, head])
        optimizer = _make_optimizer(adapted, excluded, train_config)
        state = load_train_state(resume_dir / "checkpoint.state.nxch", encoder, head, optimizer)
        rng.bit_generator.state = state.rng_state
    else:
        encoder = build_encoder(model_config, train_config.seed)
        head = build_projection_head(model_config, train_config, train_config.seed + 1)
        channel_scale = compute_channel_scale(arr)
        adapted, excluded = split_decay_groups([encoder, head])
        optimizer = _make_optimizer(adapted, excluded, train_config)
        state = TrainState(rng_state=rng.bit_generator.state)

    out_dir = Path(out_dir) if out_dir is not None else None
    weights_path = out_dir / "encoder.nxch" if out_dir else None
    ckpt_path = out_dir / "checkpoint.nxch" if out_dir else None
    state_path = out_dir / "checkpoint.state.nxch" if out_dir else None
    extra_header = {"config_hash": config_hash} if config_hash else None

    log_fh = None
    log_writer = None
    if log_path is not None:
        log_path = Path(log_path)
        fresh = not log_path.exists() or resume_from is None
        log_fh = open(log_path, "w" if fresh else "a", newline="")
        log_writer = csv.writer(log_fh)
        if fresh:
            if config_hash:
                log_fh.write(f"# config_hash={config_hash}\n")
            log_writer.writerow(["epoch", "lr", "loss", "wall_time_s"])

    def checkpoint():
        if out_dir is None:
            return
        out_dir.mkdir(parents=True, exist_ok=True)
        state.rng_state = rng.bit_generator.state
        save_weights(encoder, ckpt_path, channel_scale=channel_scale, extra_header=extra_header)
        save_train_state(state_path, state, encoder, head, optimizer)

    m = arr.shape[0]
    end_epoch = train_config.epochs
    if stop_after_epochs is not None:
        end_epoch = min(end_epoch, state.epoch + stop_after_epochs)
    log_rows: List[Tuple[int, float, float, float]] = []
    t0 = time.monotonic()
    if out_dir is not None:
        checkpoint()
    try:
        while state.epoch < end_epoch:
            epoch = state.epoch
            lr = lr_schedule(epoch, train_config)
            for g in optimizer.param_groups:
                g["lr"] = lr
            epoch_losses = []
            for b in range(train_config.batches_per_epoch):
                take = min(train_config.batch_patches, m)
                idx = rng.choice(m, size=take, replace=m < train_config.batch_patches)
                batch_key = epoch * train_config.batches_per_epoch + b
                vb = make_view_batch(arr[idx], aug_config, epoch=batch_key)
                optimizer.zero_grad(set_to_none=True)
                proj, pair_index = _encode_view_batch(encoder, head, vb, channel_scale)
                loss = nt_xent_loss(proj, pair_index, train_config.temperature)
                if not torch.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}; last checkpoint retained"
                    )
                loss.backward()
                optimizer.step()
                state.step += 1
                epoch_losses.append(loss.item())
            mean_loss = float(np.mean(epoch_losses))
            state.loss_tail = (state.loss_tail + [mean_loss])[-20:]
            wall = time.monotonic() - t0
            log_rows.append((epoch, lr, mean_loss, wall))
            if log_writer is not None:
                log_writer.writerow([epoch, repr(lr), repr(mean_loss), f"{wall:.3f}"])
                log_fh.flush()
            state.epoch = epoch + 1
            if state.epoch % train_config.checkpoint_every == 0:
                checkpoint()
    finally:
        if log_fh is not None:
            log_fh.close()

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_weights(encoder, weights_path, channel_scale=channel_scale, extra_header=extra_header)
        checkpoint()
    return TrainResult(
        encoder=encoder,
        head=head,
        channel_scale=channel_scale,
        log_rows=log_rows,
        weights_path=weights_path,
        state_path=state_path,
    )
