"""Channel-disentangled convolutional encoder.

Every layer up to the interpretability stage is grouped with group count G,
one group per imaging channel, so feature group g is a function of input
channel g only. Normalization statistics are computed inside a single group
(``nn.GroupNorm`` with ``num_groups=G``) for the same reason: a full-width
norm would leak information across channels. The final dense mixing layer is
the only place channels meet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch
from torch import nn

from ..exceptions import DataError, ShapeError
from .config import ModelConfig


@dataclass
class InterpretabilityActivations:
    """Per-channel feature groups pooled at the interpretability stage.

    ``values`` has shape (G, F); entry (g, f) depends on input channel g
    only. Activations are post-ReLU, so contributions are nonnegative.
    """

    values: np.ndarray

    @property
    def channel_contribution(self) -> np.ndarray:
        return self.values.mean(axis=-1)


@dataclass
class Embedding:
    """Final mixed representation; ``projection`` is the optional
    L2-normalized vector used by the contrastive loss."""

    vector: np.ndarray
    projection: Optional[np.ndarray] = None


class NextChannelBlock(nn.Module):
    """Residual block: grouped 3x3 conv, per-group norm, grouped 1x1
    expansion, GELU, grouped 1x1 projection.

    The pointwise layers are grouped too; dense pointwise convs would
    entangle the channels this architecture exists to keep apart.
    """

    def __init__(self, width: int, groups: int, expansion: int):
        super().__init__()
        self.spatial = nn.Conv2d(width, width, kernel_size=3, padding=1, groups=groups)
        self.norm = nn.GroupNorm(groups, width)
        self.expand = nn.Conv2d(width, width * expansion, kernel_size=1, groups=groups)
        self.act = nn.GELU()
        self.project = nn.Conv2d(width * expansion, width, kernel_size=1, groups=groups)

    def forward(self, x):
        y = self.spatial(x)
        y = self.norm(y)
        y = self.project(self.act(self.expand(y)))
        return x + y


class GroupedDownsample(nn.Module):
    """Per-group norm followed by a grouped strided conv (factor f)."""

    def __init__(self, width: int, groups: int, factor: int):
        super().__init__()
        self.norm = nn.GroupNorm(groups, width)
        self.conv = nn.Conv2d(width, width, kernel_size=factor, stride=factor, groups=groups)

    def forward(self, x):
        return self.conv(self.norm(x))


class NextChannelEncoder(nn.Module):
    """Group-separated stages, interpretability stage, dense mixing layer.

    ``forward`` takes a (B, C, H, W) float tensor and returns
    ``(activations, embedding)`` with shapes (B, G, F) and (B, N).
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        G, D = config.groups, config.width
        self.stem = nn.Sequential(
            nn.Conv2d(config.channels, D, kernel_size=3, padding=1, groups=G),
            nn.GroupNorm(G, D),
        )
        stages = []
        for s, depth in enumerate(config.stage_depths):
            if s > 0:
                stages.append(GroupedDownsample(D, G, config.downsample_factors[s - 1]))
            for _ in range(depth):
                stages.append(NextChannelBlock(D, G, config.expansion))
        self.stages = nn.Sequential(*stages)
        self.interp_act = nn.ReLU()  # keeps channel contributions >= 0
        self.mixing = nn.Linear(D, config.embed_dim)

    def interpretability(self, x: torch.Tensor) -> torch.Tensor:
        """(B, C, H, W) -> (B, G, F), group-separated throughout."""
        y = self.stem(x)
        y = self.stages(y)
        y = self.interp_act(y)
        pooled = y.mean(dim=(2, 3))
        B = pooled.shape[0]
        return pooled.view(B, self.config.groups, self.config.features_per_group)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        acts = self.interpretability(x)
        emb = self.mixing(acts.flatten(1))
        return acts, emb


def build_encoder(config: ModelConfig, seed: int) -> NextChannelEncoder:
    """Construct an encoder with deterministic fan-in-scaled init.

    Same (config, seed) gives bit-identical parameters. Weights are drawn
    from one seeded generator in module order; the draw distribution is the
    same for every group.
    """
    enc = NextChannelEncoder(config)
    gen = torch.Generator().manual_seed(seed & 0xFFFFFFFFFFFFFFFF)
    with torch.no_grad():
        for mod in enc.modules():
            if isinstance(mod, nn.Conv2d):
                fan_in = mod.weight.shape[1] * mod.weight.shape[2] * mod.weight.shape[3]
                mod.weight.normal_(0.0, math.sqrt(2.0 / fan_in), generator=gen)
                if mod.bias is not None:
                    mod.bias.zero_()
            elif isinstance(mod, nn.Linear):
                fan_in = mod.weight.shape[1]
                mod.weight.normal_(0.0, math.sqrt(2.0 / fan_in), generator=gen)
                if mod.bias is not None:
                    mod.bias.zero_()
            elif isinstance(mod, nn.GroupNorm):
                mod.weight.fill_(1.0)
                mod.bias.zero_()
    return enc


def _as_batch_tensor(encoder: NextChannelEncoder, patches: np.ndarray) -> torch.Tensor:
    """Validate an (M, S, S, C) or (S, S, C) array and convert to NCHW."""
    arr = np.asarray(patches)
    single = arr.ndim == 3
    if single:
        arr = arr[None]
    if arr.ndim != 4:
        raise ShapeError(f"expected (S, S, C) or (M, S, S, C), got shape {arr.shape}")
    cfg = encoder.config
    if arr.shape[-1] != cfg.channels:
        raise ShapeError(
            f"patch has {arr.shape[-1]} channels, encoder expects {cfg.channels}"
        )
    if min(arr.shape[1], arr.shape[2]) < cfg.min_input_size:
        raise ShapeError(
            f"input size {arr.shape[1]}x{arr.shape[2]} below minimum "
            f"{cfg.min_input_size}x{cfg.min_input_size}"
        )
    if not np.isfinite(arr).all():
        raise DataError("patch contains non-finite values")
    dtype = next(encoder.parameters()).dtype
    t = torch.from_numpy(np.ascontiguousarray(arr)).to(dtype)
    return t.permute(0, 3, 1, 2).contiguous()


def forward_patch(
    encoder: NextChannelEncoder, patch: np.ndarray
) -> Tuple[InterpretabilityActivations, Embedding]:
    """Evaluate one (S, S, C) patch; see class docstring for shapes."""
    t = _as_batch_tensor(encoder, patch)
    if t.shape[0] != 1:
        raise ShapeError("forward_patch takes a single patch; use encode_patches")
    with torch.no_grad():
        acts, emb = encoder(t)
    return (
        InterpretabilityActivations(values=acts[0].numpy().astype(np.float32)),
        Embedding(vector=emb[0].numpy().astype(np.float32)),
    )


def encode_patches(
    encoder: NextChannelEncoder,
    patches: np.ndarray,
    batch_size: int = 1024,
    channel_scale: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Batched inference: (M, S, S, C) -> activations (M, G, F), embeddings (M, N).

    ``channel_scale`` is the per-channel divisor stored with trained weights;
    pass it so inference sees the same intensity scale as training did.
    """
    arr = np.asarray(patches, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    if channel_scale is not None:
        arr = arr / np.asarray(channel_scale, dtype=np.float32)
    acts_out = []
    emb_out = []
    encoder.eval()
    with torch.no_grad():
        for i in range(0, arr.shape[0], batch_size):
            t = _as_batch_tensor(encoder, arr[i : i + batch_size])
            a, e = encoder(t)
            acts_out.append(a.numpy().astype(np.float32))
            emb_out.append(e.numpy().astype(np.float32))
    if not acts_out:
        cfg = encoder.config
        return (
            np.zeros((0, cfg.groups, cfg.features_per_group), np.float32),
            np.zeros((0, cfg.embed_dim), np.float32),
        )
    return np.concatenate(acts_out), np.concatenate(emb_out)


def channel_contribution(activations) -> np.ndarray:
    """Mean activation per feature group: (..., G, F) -> (..., G)."""
    if isinstance(activations, InterpretabilityActivations):
        return activations.channel_contribution
    return np.asarray(activations).mean(axis=-1)
