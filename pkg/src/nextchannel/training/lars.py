"""Layer-wise adaptive rate scaling on top of momentum SGD.

Per parameter tensor: trust_ratio = ||w|| / (||g|| + weight_decay * ||w||),
falling back to 1 when either norm is zero. The adapted gradient
(trust_ratio * (g + weight_decay * w)) feeds the momentum buffer and the
step is -lr * buffer, so a zero learning rate leaves parameters untouched
while buffers still update. Bias and normalization parameters go in an
excluded group: no adaptation, no weight decay.
"""

from __future__ import annotations

from typing import Iterable, Tuple

import torch
from torch.optim.optimizer import Optimizer

from ..exceptions import TrainingDivergedError


def trust_ratio(
    w_norm: float, g_norm: float, weight_decay: float, coeff: float = 1.0
) -> float:
    """Scalar trust ratio with the zero-norm fallback of 1."""
    denom = g_norm + weight_decay * w_norm
    if w_norm == 0.0 or denom == 0.0:
        return 1.0
    return coeff * w_norm / denom


class Lars(Optimizer):
    """LARS optimizer; set ``lars_adapt=False`` on a group to exclude it.

    ``trust_coefficient`` defaults to 1 so a single-tensor step with
    ||w|| = ||g|| = 1 and no decay is plain SGD.
    """

    def __init__(self, params, lr, momentum=0.9, weight_decay=0.0, trust_coefficient=1.0):
        if lr < 0:
            raise ValueError(f"invalid learning rate {lr}")
        if momentum < 0:
            raise ValueError(f"invalid momentum {momentum}")
        if weight_decay < 0:
            raise ValueError(f"invalid weight_decay {weight_decay}")
        defaults = dict(
            lr=lr,
            momentum=momentum,
            weight_decay=weight_decay,
            trust_coefficient=trust_coefficient,
            lars_adapt=True,
        )
        super().__init__(params, defaults)

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()
        for group in self.param_groups:
            lr = group["lr"]
            momentum = group["momentum"]
            wd = group["weight_decay"] if group["lars_adapt"] else 0.0
            coeff = group["trust_coefficient"]
            for p in group["params"]:
                if p.grad is None:
                    continue
                grad = p.grad
                if not torch.isfinite(grad).all():
                    raise TrainingDivergedError(
                        f"non-finite gradient in tensor of shape {tuple(p.shape)}"
                    )
                if group["lars_adapt"]:
                    w_norm = p.norm(2.0).item()
                    g_norm = grad.norm(2.0).item()
                    ratio = trust_ratio(w_norm, g_norm, wd, coeff)
                    adapted = (grad + wd * p) * ratio
                else:
                    adapted = grad
                state = self.state[p]
                buf = state.get("momentum_buffer")
                if buf is None:
                    buf = state["momentum_buffer"] = torch.zeros_like(p)
                buf.mul_(momentum).add_(adapted)
                p.add_(buf, alpha=-lr)
        return loss


def split_decay_groups(
    modules: Iterable[torch.nn.Module],
) -> Tuple[list, list]:
    """Partition parameters into (adapted, excluded) lists.

    Excluded: biases and normalization scales/offsets, identified as
    parameters with ndim <= 1 (the standard exclusion).
    """
    adapted, excluded = [], []
    seen = set()
    for module in modules:
        for p in module.parameters():
            if id(p) in seen:
                continue
            seen.add(id(p))
            (excluded if p.ndim <= 1 else adapted).append(p)
    return adapted, excluded
