"""Stochastic patch augmentations and multi-crop view generation.

Five transforms applied in a fixed order: global intensity scaling,
per-pixel Gaussian noise, rotation, isotropic scaling, and axis flips.
Rotation and scaling resample bilinearly with zero fill (background is zero
in preprocessed multiplex images). Intensity scaling uses one factor for
all channels so relative marker levels survive augmentation.

Views are center crops of independently augmented copies; crops of
different sizes are batched as size-homogeneous sub-batches, never padded.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .exceptions import ConfigurationError, DataError

_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class AugmentConfig:
    intensity_range: Tuple[float, float] = (0.5, 2.0)
    noise_std_range: Tuple[float, float] = (0.0, 0.1)
    rotation_range_deg: Tuple[float, float] = (0.0, 360.0)
    scale_range: Tuple[float, float] = (0.9, 1.1)
    flip_prob: float = 0.5
    crop_sizes: Tuple[int, ...] = (16, 16, 14, 12)
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("intensity_range", "noise_std_range", "rotation_range_deg", "scale_range"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ConfigurationError(f"{name} must be a valid (lo, hi) range, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.noise_std_range[0] < 0:
            raise ConfigurationError("noise_std_range must be nonnegative")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ConfigurationError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if not self.crop_sizes:
            raise ConfigurationError("crop_sizes must be non-empty")
        for s in self.crop_sizes:
            if not isinstance(s, int) or s <= 0:
                raise ConfigurationError(f"crop sizes must be positive integers, got {s!r}")
        object.__setattr__(self, "crop_sizes", tuple(self.crop_sizes))

    @classmethod
    def identity(cls, crop_sizes: Sequence[int] = (16, 16, 14, 12)) -> "AugmentConfig":
        """Config whose augmentation is exactly the identity map."""
        return cls(
            intensity_range=(1.0, 1.0),
            noise_std_range=(0.0, 0.0),
            rotation_range_deg=(0.0, 0.0),
            scale_range=(1.0, 1.0),
            flip_prob=0.0,
            crop_sizes=tuple(crop_sizes),
        )

    @property
    def views_per_patch(self) -> int:
        return len(self.crop_sizes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["crop_sizes"] = list(self.crop_sizes)
        for k in ("intensity_range", "noise_std_range", "rotation_range_deg", "scale_range"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentConfig":
        d = dict(d)
        for k in ("intensity_range", "noise_std_range", "rotation_range_deg", "scale_range"):
            if k in d:
                d[k] = tuple(d[k])
        if "crop_sizes" in d:
            d["crop_sizes"] = tuple(int(s) for s in d["crop_sizes"])
        return cls(**d)


def view_rng(seed: int, patch_index: int, epoch: int) -> np.random.Generator:
    """Independent per-patch stream keyed on (seed, patch_index, epoch)."""
    return np.random.default_rng(
        np.random.SeedSequence([seed & _U64, patch_index & _U64, epoch & _U64])
    )


def _zoom_about_center(arr: np.ndarray, factor: float) -> np.ndarray:
    """Isotropic spatial scaling keeping the patch center fixed."""
    h, w = arr.shape[0], arr.shape[1]
    cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
    inv = 1.0 / factor
    matrix = np.diag([inv, inv, 1.0])
    offset = np.array([cr * (1.0 - inv), cc * (1.0 - inv), 0.0])
    return ndimage.affine_transform(
        arr, matrix, offset=offset, order=1, mode="constant", cval=0.0, prefilter=False
    )


def augment_once(patch: np.ndarray, config: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """One stochastic augmentation pass; output has the input's shape.

    Draws are consumed in a fixed order regardless of whether a transform
    degenerates to the identity, so a given rng state always yields the
    same output.
    """
    arr = np.asarray(patch, dtype=np.float32)
    if arr.ndim != 3:
        raise DataError(f"patch must be (H, W, C), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("patch contains non-finite values")

    factor = rng.uniform(*config.intensity_range)
    out = arr * np.float32(factor)

    std = rng.uniform(*config.noise_std_range)
    noise = rng.standard_normal(out.shape, dtype=np.float32)
    out = out + np.float32(std) * noise

    angle = rng.uniform(*config.rotation_range_deg)
    if angle != 0.0:
        out = ndimage.rotate(
            out, angle, axes=(1, 0), reshape=False, order=1,
            mode="constant", cval=0.0, prefilter=False,
        )

    scale = rng.uniform(*config.scale_range)
    if scale != 1.0:
        out = _zoom_about_center(out, scale)

    if rng.random() < config.flip_prob:
        out = out[::-1, :, :]
    if rng.random() < config.flip_prob:
        out = out[:, ::-1, :]
    return np.ascontiguousarray(out, dtype=np.float32)


def center_crop(patch: np.ndarray, size: int) -> np.ndarray:
    """Crop rows/cols [S/2 - s/2, S/2 + s/2) around the patch center."""
    h, w = patch.shape[0], patch.shape[1]
    if size > h or size > w:
        raise ConfigurationError(f"crop size {size} exceeds patch size {h}x{w}")
    r0 = (h - size) // 2
    c0 = (w - size) // 2
    return patch[r0 : r0 + size, c0 : c0 + size, :]


def make_views(
    patch: np.ndarray, config: AugmentConfig, rng: np.random.Generator
) -> List[np.ndarray]:
    """Independently augment the patch once per crop size, then center-crop."""
    arr = np.asarray(patch, dtype=np.float32)
    if max(config.crop_sizes) > min(arr.shape[0], arr.shape[1]):
        raise ConfigurationError(
            f"largest crop {max(config.crop_sizes)} exceeds patch size {arr.shape[:2]}"
        )
    return [center_crop(augment_once(arr, config, rng), s) for s in config.crop_sizes]


@dataclass
class ViewBatch:
    """Views of a patch batch, grouped by crop size (no padding).

    ``groups`` maps crop size -> (views (n, s, s, C), pair_index (n,)) where
    pair_index holds each view's source-patch position in the batch. The
    concatenation order over groups is fixed (config's crop_sizes order,
    deduplicated), so downstream consumers are deterministic.
    """

    sizes: Tuple[int, ...]
    groups: Dict[int, Tuple[np.ndarray, np.ndarray]]
    num_patches: int
    views_per_patch: int

    @property
    def num_views(self) -> int:
        return self.num_patches * self.views_per_patch

    @property
    def pair_index(self) -> np.ndarray:
        return np.concatenate([self.groups[s][1] for s in self.sizes])


def make_view_batch(
    patches: np.ndarray, config: AugmentConfig, epoch: int = 0
) -> ViewBatch:
    """Augmented multi-crop views for a (B, S, S, C) patch batch.

    Each patch slot gets its own rng stream derived from
    (config.rng_seed, slot, epoch), so batches are reproducible and slots
    can be processed in parallel.
    """
    arr = np.asarray(patches, dtype=np.float32)
    if arr.ndim != 4:
        raise DataError(f"expected (B, S, S, C), got shape {arr.shape}")
    b = arr.shape[0]
    per_size: Dict[int, Tuple[list, list]] = {s: ([], []) for s in config.crop_sizes}
    for slot in range(b):
        rng = view_rng(config.rng_seed, slot, epoch)
        for size, view in zip(config.crop_sizes, make_views(arr[slot], config, rng)):
            views, idx = per_size[size]
            views.append(view)
            idx.append(slot)
    sizes = tuple(dict.fromkeys(config.crop_sizes))
    groups = {
        s: (np.stack(per_size[s][0]), np.asarray(per_size[s][1], dtype=np.int64))
        for s in sizes
    }
    return ViewBatch(
        sizes=sizes,
        groups=groups,
        num_patches=b,
        views_per_patch=config.views_per_patch,
    )
