from .lars import Lars, split_decay_groups, trust_ratio
from .loop import (
    ProjectionHead,
    TrainConfig,
    TrainResult,
    TrainState,
    build_projection_head,
    compute_channel_scale,
    load_train_state,
    save_train_state,
    train,
    training_plan,
)
from .loss import nt_xent_loss
from .schedule import lr_schedule, warmup_cosine_lr

__all__ = [
    "Lars",
    "split_decay_groups",
    "trust_ratio",
    "nt_xent_loss",
    "lr_schedule",
    "warmup_cosine_lr",
    "TrainConfig",
    "TrainState",
    "TrainResult",
    "ProjectionHead",
    "build_projection_head",
    "compute_channel_scale",
    "train",
    "training_plan",
    "save_train_state",
    "load_train_state",
]
