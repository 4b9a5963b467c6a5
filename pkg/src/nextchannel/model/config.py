"""Encoder hyperparameters and their validity rules."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from math import prod
from typing import Tuple

from ..exceptions import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    """Shape parameters of the channel-disentangled encoder.

    ``groups`` must equal ``channels`` (one feature group per imaging
    channel); pass ``allow_group_mismatch=True`` to lift that check for
    experiments. Total width is ``groups * features_per_group`` at every
    group-separated layer.
    """

    channels: int
    groups: int = -1  # -1 means "same as channels"
    features_per_group: int = 4
    expansion: int = 2
    embed_dim: int = 256
    stage_depths: Tuple[int, ...] = (2, 2, 2)
    downsample_factors: Tuple[int, ...] = field(default=None)  # type: ignore[assignment]
    allow_group_mismatch: bool = False

    def __post_init__(self):
        if self.groups == -1:
            object.__setattr__(self, "groups", self.channels)
        object.__setattr__(self, "stage_depths", tuple(self.stage_depths))
        if self.downsample_factors is None:
            object.__setattr__(
                self, "downsample_factors", (2,) * (len(self.stage_depths) - 1)
            )
        object.__setattr__(
            self, "downsample_factors", tuple(self.downsample_factors)
        )
        for name in ("channels", "groups", "features_per_group", "expansion", "embed_dim"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if not self.stage_depths:
            raise ConfigurationError("stage_depths must be non-empty")
        for i, d in enumerate(self.stage_depths):
            if not isinstance(d, int) or d <= 0:
                raise ConfigurationError(f"stage_depths[{i}] must be a positive integer, got {d!r}")
        for i, f in enumerate(self.downsample_factors):
            if not isinstance(f, int) or f <= 0:
                raise ConfigurationError(
                    f"downsample_factors[{i}] must be a positive integer, got {f!r}"
                )
        if len(self.downsample_factors) != len(self.stage_depths) - 1:
            raise ConfigurationError(
                "downsample_factors must have one entry per stage boundary: "
                f"expected {len(self.stage_depths) - 1}, got {len(self.downsample_factors)}"
            )
        if self.groups != self.channels and not self.allow_group_mismatch:
            raise ConfigurationError(
                f"groups ({self.groups}) must equal channels ({self.channels}); "
                "set allow_group_mismatch=True to override"
            )
        if self.groups > self.channels or self.channels % self.groups != 0:
            raise ConfigurationError(
                f"channels ({self.channels}) must be divisible by groups ({self.groups})"
            )
        # width divisibility holds by construction, but guard the expansion too
        if (self.width * self.expansion) % self.groups != 0:
            raise ConfigurationError("expanded width not divisible by groups")

    @property
    def width(self) -> int:
        """Total feature width D at group-separated layers."""
        return self.groups * self.features_per_group

    @property
    def interp_features(self) -> int:
        """Features per group exposed at the interpretability stage."""
        return self.features_per_group

    @property
    def min_input_size(self) -> int:
        """Smallest accepted square input, set by the downsampling chain."""
        return 2 * prod(self.downsample_factors) if self.downsample_factors else 2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stage_depths"] = list(self.stage_depths)
        d["downsample_factors"] = list(self.downsample_factors)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["stage_depths"] = tuple(d.get("stage_depths", (2, 2, 2)))
        if d.get("downsample_factors") is not None:
            d["downsample_factors"] = tuple(d["downsample_factors"])
        return cls(**d)
