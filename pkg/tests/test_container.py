import numpy as np
import pytest

from nextchannel.container import FORMAT_VERSION, read_container, write_container
from nextchannel.exceptions import CorruptFileError, FormatVersionError


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a": rng.standard_normal((3, 4)).astype(np.float32),
        "b/c": rng.standard_normal((2, 1, 5)).astype(np.float32),
        "scalarish": np.float32(2.5).reshape(()),
    }
    header = {"kind": "test", "note": "hello", "n": 3}
    path = tmp_path / "t.nxch"
    write_container(path, header, tensors)
    h2, t2 = read_container(path)
    assert h2 == header
    assert set(t2) == set(tensors)
    for k in tensors:
        assert t2[k].dtype == np.float32
        assert np.array_equal(t2[k], np.asarray(tensors[k], dtype=np.float32))


def test_truncated_file_rejected(tmp_path):
    path = tmp_path / "t.nxch"
    write_container(path, {}, {"a": np.zeros((8, 8), np.float32)})
    data = path.read_bytes()
    for cut in (2, 10, len(data) - 17):
        bad = tmp_path / f"cut{cut}.nxch"
        bad.write_bytes(data[:cut])
        with pytest.raises(CorruptFileError):
            read_container(bad)


def test_trailing_garbage_rejected(tmp_path):
    path = tmp_path / "t.nxch"
    write_container(path, {}, {"a": np.zeros(3, np.float32)})
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(CorruptFileError):
        read_container(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "t.nxch"
    write_container(path, {}, {})
    data = bytearray(path.read_bytes())
    data[:4] = b"JUNK"
    path.write_bytes(bytes(data))
    with pytest.raises(CorruptFileError):
        read_container(path)


def test_version_mismatch_rejected(tmp_path):
    path = tmp_path / "t.nxch"
    write_container(path, {}, {})
    data = bytearray(path.read_bytes())
    data[4] = FORMAT_VERSION + 1
    path.write_bytes(bytes(data))
    with pytest.raises(FormatVersionError):
        read_container(path)


def test_float64_input_downcast(tmp_path):
    path = tmp_path / "t.nxch"
    write_container(path, {}, {"a": np.array([1.0, 2.0])})
    _, t = read_container(path)
    assert t["a"].dtype == np.float32
