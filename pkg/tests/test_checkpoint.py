"""Binary tensor container: layout, round trips, corruption handling."""

import os
import struct

import numpy as np
import pytest

from speakernas.autodiff import load_checkpoint, save_checkpoint
from speakernas.errors import CheckpointError


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {
        "stem.weight": rng.standard_normal((4, 1, 3, 3)).astype(np.float32),
        "alpha_normal": rng.standard_normal((14, 8)).astype(np.float32),
        "scalar_ish": np.array([7.0], dtype=np.float32),
    }
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, arrays)
    back = load_checkpoint(path)
    assert set(back) == set(arrays)
    for name in arrays:
        assert back[name].dtype == np.float32
        assert np.array_equal(back[name], arrays[name])


def test_exact_byte_layout():
    """Golden bytes for a one-tensor file pin the on-disk format."""
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "x.ckpt")
        save_checkpoint(path, {"a": np.array([1.5, -2.0], dtype=np.float32)})
        blob = open(path, "rb").read()
    expect = (b"ASNAS"
              + struct.pack("<H", 1)      # version
              + struct.pack("<I", 1)      # tensor count
              + struct.pack("<H", 1) + b"a"
              + struct.pack("<I", 1)      # rank
              + struct.pack("<I", 2)      # dim
              + struct.pack("<2f", 1.5, -2.0))
    assert blob == expect


def test_save_is_atomic_no_leftover_temp(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"a": np.zeros(3, dtype=np.float32)})
    save_checkpoint(path, {"a": np.ones(3, dtype=np.float32)})  # overwrite
    leftovers = [f for f in os.listdir(tmp_path) if f != "m.ckpt"]
    assert leftovers == []
    assert np.array_equal(load_checkpoint(path)["a"], np.ones(3))


def test_float64_input_is_stored_as_float32(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"a": np.array([1.0, 2.0])})  # float64 in
    assert load_checkpoint(path)["a"].dtype == np.float32


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"a": np.zeros(2, dtype=np.float32)})
    blob = bytearray(open(path, "rb").read())
    blob[:5] = b"NOPES"
    open(path, "wb").write(bytes(blob))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_unsupported_version_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"a": np.zeros(2, dtype=np.float32)})
    blob = bytearray(open(path, "rb").read())
    blob[5:7] = struct.pack("<H", 9)
    open(path, "wb").write(bytes(blob))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_truncation_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"a": np.zeros((3, 3), dtype=np.float32)})
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-5])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_trailing_garbage_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"a": np.zeros(2, dtype=np.float32)})
    with open(path, "ab") as fh:
        fh.write(b"\x00\x01\x02")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_empty_mapping_round_trips(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {})
    assert load_checkpoint(path) == {}


def test_unicode_names(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"céll.0.wéight": np.ones(1, dtype=np.float32)})
    assert "céll.0.wéight" in load_checkpoint(path)
