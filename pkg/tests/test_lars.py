import numpy as np
import pytest
import torch

from nextchannel.exceptions import TrainingDivergedError
from nextchannel.training import Lars, split_decay_groups, trust_ratio


def single_tensor_oracle(w, g, lr, momentum, wd, buf):
    """Hand-written LARS step in float64 numpy."""
    w_norm = np.linalg.norm(w)
    g_norm = np.linalg.norm(g)
    denom = g_norm + wd * w_norm
    ratio = 1.0 if (w_norm == 0.0 or denom == 0.0) else w_norm / denom
    adapted = ratio * (g + wd * w)
    buf = momentum * buf + adapted
    return w - lr * buf, buf


def make_param(values):
    p = torch.tensor(np.asarray(values, dtype=np.float64), requires_grad=True)
    return p


def test_unit_norms_plain_sgd_step():
    # ||w|| = 1, ||g|| = 1, wd = 0, momentum = 0, lr = 0.1: ratio 1, step -0.1 g
    w0 = np.array([0.6, 0.8])
    g = np.array([0.8, -0.6])
    p = make_param(w0)
    p.grad = torch.tensor(g)
    opt = Lars([p], lr=0.1, momentum=0.0, weight_decay=0.0)
    opt.step()
    assert np.allclose(p.detach().numpy(), w0 - 0.1 * g, atol=1e-15)


def test_matches_oracle_with_decay_and_momentum():
    rng = np.random.default_rng(0)
    w = rng.standard_normal((4, 3))
    p = make_param(w)
    opt = Lars([p], lr=0.05, momentum=0.9, weight_decay=0.01)
    buf = np.zeros_like(w)
    cur = w.copy()
    for _ in range(5):
        g = rng.standard_normal(w.shape)
        p.grad = torch.tensor(g)
        opt.step()
        cur, buf = single_tensor_oracle(cur, g, 0.05, 0.9, 0.01, buf)
        assert np.abs(p.detach().numpy() - cur).max() <= 1e-9


def test_zero_lr_updates_buffers_only():
    rng = np.random.default_rng(1)
    w = rng.standard_normal(5)
    p = make_param(w)
    opt = Lars([p], lr=0.1, momentum=0.9, weight_decay=0.0)
    p.grad = torch.tensor(rng.standard_normal(5))
    opt.step()
    after_first = p.detach().numpy().copy()
    buf_first = opt.state[p]["momentum_buffer"].numpy().copy()
    for g in opt.param_groups:
        g["lr"] = 0.0
    p.grad = torch.tensor(rng.standard_normal(5))
    opt.step()
    assert np.array_equal(p.detach().numpy(), after_first)  # params untouched
    assert not np.array_equal(opt.state[p]["momentum_buffer"].numpy(), buf_first)


def test_zero_weight_trust_fallback():
    assert trust_ratio(0.0, 1.0, 0.1) == 1.0
    assert trust_ratio(1.0, 0.0, 0.0) == 1.0
    p = make_param(np.zeros(3))
    g = np.array([1.0, 2.0, -1.0])
    p.grad = torch.tensor(g)
    opt = Lars([p], lr=0.1, momentum=0.0, weight_decay=0.01)
    opt.step()
    # ratio falls back to 1; wd * w is zero, so plain SGD
    assert np.allclose(p.detach().numpy(), -0.1 * g, atol=1e-15)


def test_excluded_group_plain_momentum_sgd():
    w = np.array([3.0, 4.0])
    p = make_param(w)
    g = np.array([1.0, 1.0])
    p.grad = torch.tensor(g)
    opt = Lars(
        [{"params": [p], "lars_adapt": False, "weight_decay": 0.0}],
        lr=0.1,
        momentum=0.0,
        weight_decay=0.5,
    )
    opt.step()
    assert np.allclose(p.detach().numpy(), w - 0.1 * g, atol=1e-15)


def test_non_finite_gradient_aborts():
    p = make_param(np.ones(3))
    p.grad = torch.tensor(np.array([1.0, float("nan"), 0.0]))
    opt = Lars([p], lr=0.1)
    with pytest.raises(TrainingDivergedError):
        opt.step()


def test_split_decay_groups_excludes_norm_and_bias():
    from nextchannel.model import ModelConfig, build_encoder

    enc = build_encoder(ModelConfig(channels=3, embed_dim=8), seed=0)
    adapted, excluded = split_decay_groups([enc])
    assert all(p.ndim > 1 for p in adapted)
    assert all(p.ndim <= 1 for p in excluded)
    total = len(list(enc.parameters()))
    assert len(adapted) + len(excluded) == total
