import numpy as np
import pytest
import torch

from nextchannel.exceptions import (
    ConfigMismatchError,
    CorruptFileError,
    FormatVersionError,
)
from nextchannel.model import (
    ModelConfig,
    build_encoder,
    forward_patch,
    load_weights,
    save_weights,
)


@pytest.fixture
def encoder():
    return build_encoder(ModelConfig(channels=3, embed_dim=8), seed=5)


def test_round_trip_bit_exact_forward(tmp_path, encoder):
    path = tmp_path / "w.nxch"
    scale = np.array([1.0, 2.0, 0.5], np.float32)
    save_weights(encoder, path, channel_scale=scale)
    loaded, scale2, header = load_weights(path)
    assert np.array_equal(scale, scale2)
    assert header["config"] == encoder.config.to_dict()
    for pa, pb in zip(encoder.state_dict().values(), loaded.state_dict().values()):
        assert torch.equal(pa, pb)
    rng = np.random.default_rng(0)
    patch = rng.random((16, 16, 3), dtype=np.float32)
    a, e = forward_patch(encoder, patch)
    a2, e2 = forward_patch(loaded, patch)
    assert np.array_equal(a.values, a2.values)
    assert np.array_equal(e.vector, e2.vector)


def test_config_mismatch(tmp_path, encoder):
    path = tmp_path / "w.nxch"
    save_weights(encoder, path)
    with pytest.raises(ConfigMismatchError):
        load_weights(path, expected_config=ModelConfig(channels=4, embed_dim=8))


def test_truncated_file(tmp_path, encoder):
    path = tmp_path / "w.nxch"
    save_weights(encoder, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(CorruptFileError):
        load_weights(path)


def test_version_mismatch(tmp_path, encoder):
    path = tmp_path / "w.nxch"
    save_weights(encoder, path)
    data = bytearray(path.read_bytes())
    data[4] = 99
    path.write_bytes(bytes(data))
    with pytest.raises(FormatVersionError):
        load_weights(path)


def test_wrong_kind_rejected(tmp_path):
    from nextchannel.container import write_container

    path = tmp_path / "not_weights.nxch"
    write_container(path, {"kind": "something-else"}, {})
    with pytest.raises(CorruptFileError):
        load_weights(path)
