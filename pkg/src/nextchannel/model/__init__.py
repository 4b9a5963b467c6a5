from .config import ModelConfig
from .disentangle import DisentanglementReport, disentanglement_check
from .encoder import (
    Embedding,
    InterpretabilityActivations,
    NextChannelBlock,
    NextChannelEncoder,
    build_encoder,
    channel_contribution,
    encode_patches,
    forward_patch,
)
from .weights_io import load_weights, save_weights

__all__ = [
    "ModelConfig",
    "NextChannelEncoder",
    "NextChannelBlock",
    "InterpretabilityActivations",
    "Embedding",
    "build_encoder",
    "forward_patch",
    "encode_patches",
    "channel_contribution",
    "disentanglement_check",
    "DisentanglementReport",
    "save_weights",
    "load_weights",
]
