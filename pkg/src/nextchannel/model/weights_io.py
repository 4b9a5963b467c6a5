"""Encoder weight persistence on top of the tensor container."""

from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np
import torch

from ..container import read_container, write_container
from ..exceptions import ConfigMismatchError, CorruptFileError
from .config import ModelConfig
from .encoder import NextChannelEncoder

_KIND = "nextchannel-encoder-weights"


def save_weights(
    encoder: NextChannelEncoder,
    path,
    channel_scale: Optional[np.ndarray] = None,
    extra_header: Optional[dict] = None,
) -> None:
    """Write encoder parameters (and optional per-channel intensity scale)."""
    header = {"kind": _KIND, "config": encoder.config.to_dict()}
    if extra_header:
        header.update(extra_header)
    tensors: Dict[str, np.ndarray] = {
        f"param/{name}": p.detach().numpy() for name, p in encoder.state_dict().items()
    }
    if channel_scale is not None:
        scale = np.asarray(channel_scale, dtype=np.float32)
        if scale.shape != (encoder.config.channels,):
            raise ConfigMismatchError(
                f"channel_scale shape {scale.shape} != ({encoder.config.channels},)"
            )
        tensors["channel_scale"] = scale
    write_container(path, header, tensors)


def load_weights(
    path, expected_config: Optional[ModelConfig] = None
) -> Tuple[NextChannelEncoder, Optional[np.ndarray], dict]:
    """Read weights back; returns (encoder, channel_scale or None, header).

    ``expected_config`` (when given) must match the stored config exactly,
    otherwise a :class:`ConfigMismatchError` is raised. Round-trips are
    bit-exact: parameters are stored and restored as float32.
    """
    header, tensors = read_container(path)
    if header.get("kind") != _KIND:
        raise CorruptFileError(f"{path}: not an encoder weight file")
    try:
        config = ModelConfig.from_dict(header["config"])
    except (KeyError, TypeError) as exc:
        raise CorruptFileError(f"{path}: bad config header: {exc}") from exc
    if expected_config is not None and config != expected_config:
        raise ConfigMismatchError(
            f"stored config {config.to_dict()} does not match expected "
            f"{expected_config.to_dict()}"
        )
    encoder = NextChannelEncoder(config)
    state = {}
    for name, ref in encoder.state_dict().items():
        key = f"param/{name}"
        if key not in tensors:
            raise CorruptFileError(f"{path}: missing tensor {key}")
        arr = tensors[key]
        if tuple(arr.shape) != tuple(ref.shape):
            raise CorruptFileError(
                f"{path}: tensor {key} has shape {tuple(arr.shape)}, "
                f"expected {tuple(ref.shape)}"
            )
        state[name] = torch.from_numpy(arr)
    encoder.load_state_dict(state)
    encoder.eval()
    scale = tensors.get("channel_scale")
    return encoder, scale, header
