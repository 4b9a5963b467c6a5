"""Multi-view normalized temperature-scaled contrastive loss.

Generalizes the two-view formulation to V views per patch: every ordered
pair of views from the same patch is an anchor-positive pair, and the
denominator for that pair holds the positive plus all views of *other*
patches. Other views of the anchor's own patch are neither positives nor
negatives for that term. The loss is the mean over all anchor-positive
pairs of -log(exp(s_ap/t) / (exp(s_ap/t) + sum_neg exp(s_an/t))).
"""

from __future__ import annotations

import torch

from ..exceptions import DataError


def nt_xent_loss(
    projections: torch.Tensor, pair_index: torch.Tensor, temperature: float = 0.5
) -> torch.Tensor:
    """Contrastive loss over (B*V, P) L2-normalized projection rows.

    ``pair_index[i]`` identifies the source patch of row i; rows sharing an
    index are mutual positives. Raises if any patch contributes fewer than
    two views or if the temperature is not positive.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if projections.ndim != 2:
        raise ValueError(f"projections must be 2-D, got shape {tuple(projections.shape)}")
    n = projections.shape[0]
    pair_index = torch.as_tensor(pair_index, dtype=torch.long, device=projections.device)
    if pair_index.shape != (n,):
        raise ValueError("pair_index must have one entry per projection row")
    if not torch.isfinite(projections).all():
        raise DataError("projections contain non-finite values")
    counts = torch.bincount(pair_index)
    present = counts[counts > 0]
    if (present < 2).any():
        raise ValueError("every patch must contribute at least 2 views")

    sim = projections @ projections.T / temperature
    same_patch = pair_index[:, None] == pair_index[None, :]
    eye = torch.eye(n, dtype=torch.bool, device=sim.device)
    pos_mask = same_patch & ~eye
    neg_mask = ~same_patch

    # per-anchor shift keeps exp() in range; it cancels between numerator
    # and denominator
    shift = sim.masked_fill(eye, float("-inf")).max(dim=1, keepdim=True).values
    exp_sim = torch.exp(sim - shift)
    neg_sum = (exp_sim * neg_mask).sum(dim=1, keepdim=True)

    pos_exp = exp_sim[pos_mask]
    denom = pos_exp + neg_sum.expand_as(exp_sim)[pos_mask]
    losses = -(torch.log(pos_exp) - torch.log(denom))
    return losses.mean()
