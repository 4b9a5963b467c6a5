import numpy as np
import pytest
import torch

from nextchannel.exceptions import DataError, ShapeError
from nextchannel.model import (
    ModelConfig,
    build_encoder,
    channel_contribution,
    disentanglement_check,
    encode_patches,
    forward_patch,
)

CFG = ModelConfig(channels=5, features_per_group=3, expansion=2, embed_dim=12)


def random_patch(rng, size=32, channels=5):
    return rng.random((size, size, channels), dtype=np.float32)


@pytest.fixture(scope="module")
def encoder():
    return build_encoder(CFG, seed=7)


def test_build_deterministic():
    a = build_encoder(CFG, seed=123)
    b = build_encoder(CFG, seed=123)
    for (na, pa), (nb, pb) in zip(a.state_dict().items(), b.state_dict().items()):
        assert na == nb
        assert torch.equal(pa, pb)
    c = build_encoder(CFG, seed=124)
    assert any(
        not torch.equal(pa, pc)
        for pa, pc in zip(a.state_dict().values(), c.state_dict().values())
    )


def test_all_convs_grouped(encoder):
    for mod in encoder.stages.modules():
        if isinstance(mod, torch.nn.Conv2d):
            assert mod.groups == CFG.groups
        if isinstance(mod, torch.nn.GroupNorm):
            assert mod.num_groups == CFG.groups
    assert encoder.stem[0].groups == CFG.groups


def test_forward_shapes(encoder):
    rng = np.random.default_rng(0)
    acts, emb = forward_patch(encoder, random_patch(rng))
    assert acts.values.shape == (CFG.groups, CFG.features_per_group)
    assert emb.vector.shape == (CFG.embed_dim,)
    assert np.isfinite(acts.values).all() and np.isfinite(emb.vector).all()
    assert (acts.values >= 0).all()  # post-ReLU stage


def test_forward_deterministic(encoder):
    rng = np.random.default_rng(1)
    p = random_patch(rng)
    a1, e1 = forward_patch(encoder, p)
    a2, e2 = forward_patch(encoder, p)
    assert np.array_equal(a1.values, a2.values)
    assert np.array_equal(e1.vector, e2.vector)


def test_zero_patch_zero_contributions(encoder):
    # zero biases and zero norm offsets at init: an all-zero patch produces
    # exactly zero activations at the interpretability stage for any seed
    acts, emb = forward_patch(encoder, np.zeros((32, 32, 5), np.float32))
    assert np.array_equal(acts.channel_contribution, np.zeros(5, np.float32))
    assert np.array_equal(emb.vector, np.zeros(CFG.embed_dim, np.float32))


def test_group_separation_bit_exact(encoder):
    rng = np.random.default_rng(2)
    p = random_patch(rng)
    acts0, _ = forward_patch(encoder, p)
    for c in (0, 3):
        q = p.copy()
        q[..., c] *= 2.0
        acts1, _ = forward_patch(encoder, q)
        off = [g for g in range(5) if g != c]
        assert np.array_equal(acts0.values[off], acts1.values[off])
        assert not np.array_equal(acts0.values[c], acts1.values[c])


def test_variable_input_sizes(encoder):
    rng = np.random.default_rng(3)
    dims = []
    for size in (12, 14, 16, 32):
        acts, emb = forward_patch(encoder, random_patch(rng, size=size))
        dims.append((acts.values.shape, emb.vector.shape))
    assert len(set(dims)) == 1


def test_too_small_input_rejected(encoder):
    rng = np.random.default_rng(4)
    with pytest.raises(ShapeError):
        forward_patch(encoder, random_patch(rng, size=CFG.min_input_size - 1))


def test_wrong_channel_count_rejected(encoder):
    rng = np.random.default_rng(5)
    with pytest.raises(ShapeError):
        forward_patch(encoder, rng.random((32, 32, 4), dtype=np.float32))


def test_non_finite_rejected(encoder):
    p = np.zeros((32, 32, 5), np.float32)
    p[0, 0, 0] = np.nan
    with pytest.raises(DataError):
        forward_patch(encoder, p)


def test_encode_patches_matches_single(encoder):
    rng = np.random.default_rng(6)
    patches = rng.random((7, 16, 16, 5), dtype=np.float32)
    acts, embs = encode_patches(encoder, patches, batch_size=3)
    assert acts.shape == (7, 5, 3) and embs.shape == (7, 12)
    a0, e0 = forward_patch(encoder, patches[2])
    assert np.allclose(acts[2], a0.values, atol=1e-6)
    assert np.allclose(embs[2], e0.vector, atol=1e-6)


def test_channel_contribution_mean():
    acts = np.array([[[1.0, 3.0], [0.0, 0.0], [2.0, 4.0]]])
    out = channel_contribution(acts)
    assert np.array_equal(out, np.array([[2.0, 0.0, 3.0]]))


def test_permutation_equivariance():
    # permuting input channels together with per-group parameter blocks
    # permutes the interpretability groups the same way
    cfg = ModelConfig(channels=4, features_per_group=2, embed_dim=8)
    enc = build_encoder(cfg, seed=11)
    rng = np.random.default_rng(7)
    patch = rng.random((16, 16, 4), dtype=np.float32)
    perm = np.array([2, 0, 3, 1])

    permuted = build_encoder(cfg, seed=11)
    state = {}
    G, F, E = cfg.groups, cfg.features_per_group, cfg.expansion
    for name, tensor in enc.state_dict().items():
        t = tensor.clone()
        if name == "mixing.weight" or name == "mixing.bias":
            state[name] = t
            continue
        if t.ndim == 4:  # grouped conv weight (G*out_pg, in_pg, k, k)
            out_pg = t.shape[0] // G
            state[name] = t.view(G, out_pg, *t.shape[1:])[perm].reshape(t.shape)
        else:  # grouped bias / norm scale / norm offset, length G*per_group
            per = t.shape[0] // G
            state[name] = t.view(G, per)[perm].reshape(t.shape)
    permuted.load_state_dict(state)

    acts_base, _ = forward_patch(enc, patch)
    acts_perm, _ = forward_patch(permuted, patch[:, :, perm])
    # group g of the permuted run should equal group perm[g] of the base run
    assert np.allclose(acts_perm.values, acts_base.values[perm], atol=1e-6)


def test_disentanglement_report_exact_zero(encoder):
    rng = np.random.default_rng(8)
    for c in range(5):
        rep = disentanglement_check(encoder, random_patch(rng, size=16), c, 0.7)
        assert rep.max_offgroup_delta == 0.0
        assert rep.max_offgroup_gradient == 0.0
        assert rep.separated
        assert rep.embedding_delta_norm > 0.0


def test_in_group_gradient_matches_finite_differences():
    # central-difference oracle in float64 against autodiff, h = 1e-3
    cfg = ModelConfig(channels=3, features_per_group=2, embed_dim=6)
    enc = build_encoder(cfg, seed=3).double()
    rng = np.random.default_rng(9)
    patch = rng.random((12, 12, 3))
    c, f = 1, 0
    t = torch.from_numpy(patch[None]).permute(0, 3, 1, 2).requires_grad_(True)
    acts = enc.interpretability(t)
    acts[0, c, f].backward()
    auto = t.grad[0, c].numpy()

    h = 1e-3
    for (i, j) in [(0, 0), (5, 7), (11, 11), (3, 2)]:
        up = patch.copy()
        up[i, j, c] += h
        dn = patch.copy()
        dn[i, j, c] -= h
        with torch.no_grad():
            au = enc.interpretability(torch.from_numpy(up[None]).permute(0, 3, 1, 2))
            ad = enc.interpretability(torch.from_numpy(dn[None]).permute(0, 3, 1, 2))
        fd = (au[0, c, f].item() - ad[0, c, f].item()) / (2 * h)
        denom = max(abs(fd), abs(auto[i, j]), 1e-8)
        assert abs(fd - auto[i, j]) / denom <= 1e-3
