import math

import numpy as np
import pytest
import torch

from nextchannel.training import nt_xent_loss


def ntxent_oracle(vectors, pair_index, tau):
    """Exhaustive enumeration of every anchor, positive, and negative.

    For each ordered anchor-positive pair the denominator is that positive
    plus every view of a different patch; other views of the anchor's own
    patch are excluded.
    """
    n = len(vectors)
    terms = []
    for a in range(n):
        for p in range(n):
            if p == a or pair_index[p] != pair_index[a]:
                continue
            s_ap = math.exp(float(np.dot(vectors[a], vectors[p])) / tau)
            denom = s_ap
            for x in range(n):
                if pair_index[x] != pair_index[a]:
                    denom += math.exp(float(np.dot(vectors[a], vectors[x])) / tau)
            terms.append(-math.log(s_ap / denom))
    return sum(terms) / len(terms)


def unit_rows(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_single_pair_identical_vectors_zero_loss():
    v = np.array([[1.0, 0.0], [1.0, 0.0]])
    loss = nt_xent_loss(torch.tensor(v), torch.tensor([0, 0]), temperature=0.5)
    assert abs(loss.item()) < 1e-7


def test_hand_built_two_by_two_matches_oracle():
    # 2 patches x 2 views of hand-picked unit vectors, tau = 1
    v = np.array(
        [
            [1.0, 0.0],
            [0.0, 1.0],
            [-1.0, 0.0],
            [math.sqrt(0.5), math.sqrt(0.5)],
        ]
    )
    pair = [0, 0, 1, 1]
    expected = ntxent_oracle(v, pair, 1.0)
    got = nt_xent_loss(torch.tensor(v), torch.tensor(pair), temperature=1.0).item()
    assert abs(got - expected) <= 1e-6
    # frozen value from the enumeration oracle above
    assert abs(expected - 1.541541973594398) < 1e-12


def test_matches_oracle_randomized_batches():
    rng = np.random.default_rng(0)
    for trial in range(200):
        n_patches = int(rng.integers(2, 5))
        views = int(rng.integers(2, 4))
        if n_patches * views > 16:
            continue
        tau = float(rng.uniform(0.1, 2.0))
        v = unit_rows(rng, n_patches * views, int(rng.integers(2, 6)))
        pair = np.repeat(np.arange(n_patches), views)
        perm = rng.permutation(len(pair))
        v, pair = v[perm], pair[perm]
        expected = ntxent_oracle(v, pair, tau)
        got = nt_xent_loss(torch.tensor(v), torch.tensor(pair), temperature=tau).item()
        assert abs(got - expected) <= 1e-6, f"trial {trial}"


def test_high_temperature_uniform_limit():
    rng = np.random.default_rng(1)
    n_patches, views = 3, 2
    v = unit_rows(rng, n_patches * views, 4)
    pair = np.repeat(np.arange(n_patches), views)
    loss = nt_xent_loss(torch.tensor(v), torch.tensor(pair), temperature=1e8).item()
    # candidates per anchor-positive pair: the positive + (B-1)*V negatives
    candidates = 1 + (n_patches - 1) * views
    assert abs(loss - math.log(candidates)) < 1e-6


def test_invariant_under_common_rotation():
    rng = np.random.default_rng(2)
    v = unit_rows(rng, 8, 3)
    pair = np.repeat(np.arange(4), 2)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a = nt_xent_loss(torch.tensor(v), torch.tensor(pair), 0.5).item()
    b = nt_xent_loss(torch.tensor(v @ q), torch.tensor(pair), 0.5).item()
    assert abs(a - b) < 1e-9


def test_gradient_flows_to_all_rows():
    rng = np.random.default_rng(3)
    v = torch.tensor(unit_rows(rng, 6, 4), requires_grad=True)
    pair = torch.tensor([0, 0, 1, 1, 2, 2])
    nt_xent_loss(v, pair, 0.5).backward()
    assert (v.grad.abs().sum(dim=1) > 0).all()


def test_single_view_patch_rejected():
    v = torch.eye(3)
    with pytest.raises(ValueError, match="at least 2 views"):
        nt_xent_loss(v, torch.tensor([0, 0, 1]), 0.5)


def test_bad_temperature_rejected():
    v = torch.eye(2)
    with pytest.raises(ValueError):
        nt_xent_loss(v, torch.tensor([0, 0]), 0.0)
