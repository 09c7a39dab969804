"""Binary tensor files: ASCII magic, then (name, rank, dims, float64 data) records.

All integers are 64-bit little-endian unsigned, all data little-endian IEEE-754
doubles. Records are written in mapping order, so equal inputs give equal bytes.
"""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path

import numpy as np

from vae_conformal.errors import FormatError

MAGIC = b"VAEREG1\n"
_U64 = np.dtype("<u8")
_F64 = np.dtype("<f8")


def encode_tensors(tensors: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC]
    for name, tensor in tensors.items():
        array = np.asarray(tensor, dtype=np.float64)
        encoded = name.encode("utf-8")
        chunks.append(np.array([len(encoded)], dtype=_U64).tobytes())
        chunks.append(encoded)
        chunks.append(np.array([array.ndim, *array.shape], dtype=_U64).tobytes())
        chunks.append(np.ascontiguousarray(array, dtype=_F64).tobytes())
    return b"".join(chunks)


def save_tensors(path: Path, tensors: Mapping[str, np.ndarray]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensors(tensors))


def load_tensors(path: Path) -> dict[str, np.ndarray]:
    raw = path.read_bytes()
    if not raw.startswith(MAGIC):
        raise FormatError(path, "bad magic header")

    offset = len(MAGIC)
    tensors: dict[str, np.ndarray] = {}

    def take(count: int, what: str) -> bytes:
        nonlocal offset
        if offset + count > len(raw):
            raise FormatError(path, f"truncated while reading {what} at byte {offset}")
        chunk = raw[offset : offset + count]
        offset += count
        return chunk

    while offset < len(raw):
        (name_len,) = np.frombuffer(take(8, "name length"), dtype=_U64)
        name = take(int(name_len), "name").decode("utf-8")
        (rank,) = np.frombuffer(take(8, "rank"), dtype=_U64)
        dims = tuple(int(d) for d in np.frombuffer(take(8 * int(rank), "shape"), dtype=_U64))
        count = int(np.prod(dims, dtype=np.int64)) if dims else 1
        data = np.frombuffer(take(8 * count, f"data of '{name}'"), dtype=_F64)
        if name in tensors:
            raise FormatError(path, f"duplicate tensor '{name}'")
        tensors[name] = data.astype(np.float64).reshape(dims)
    return tensors
