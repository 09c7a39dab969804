"""Tests for the binary tensor format."""

from pathlib import Path

import numpy as np
import pytest

from vae_conformal.errors import FormatError
from vae_conformal.nn import MAGIC, encode_tensors, load_tensors, save_tensors


class TestTensorFile:
    def test_values_names_and_shapes_preserved(self, tmp_path: Path):
        tensors = {
            "layer.0.weight": np.arange(6, dtype=float).reshape(2, 3) / 7.0,
            "layer.0.bias": np.array([np.pi, -0.0]),
            "scalar": np.array(2.5),
        }
        path = tmp_path / "weights.bin"
        save_tensors(path, tensors)
        loaded = load_tensors(path)
        assert list(loaded) == list(tensors)
        for name, tensor in tensors.items():
            assert loaded[name].shape == tensor.shape
            np.testing.assert_array_equal(loaded[name], tensor)

    def test_encoding_is_deterministic(self):
        tensors = {"a": np.ones((2, 2)), "b": np.zeros(3)}
        assert encode_tensors(tensors) == encode_tensors(dict(tensors))
        assert encode_tensors(tensors).startswith(MAGIC)

    def test_bad_magic(self, tmp_path: Path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOTMAGIC" + bytes(16))
        with pytest.raises(FormatError, match="magic"):
            load_tensors(path)

    def test_truncated_file(self, tmp_path: Path):
        path = tmp_path / "cut.bin"
        path.write_bytes(encode_tensors({"w": np.ones(10)})[:-5])
        with pytest.raises(FormatError, match="truncated"):
            load_tensors(path)

    def test_duplicate_name(self, tmp_path: Path):
        record = encode_tensors({"w": np.ones(2)})[len(MAGIC) :]
        path = tmp_path / "dup.bin"
        path.write_bytes(MAGIC + record + record)
        with pytest.raises(FormatError, match="duplicate"):
            load_tensors(path)

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(FileNotFoundError):
            load_tensors(tmp_path / "nope.bin")
