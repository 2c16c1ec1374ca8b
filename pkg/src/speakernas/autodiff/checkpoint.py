"""Binary checkpoint container.

Layout (all integers little-endian):

    magic   5 bytes  b"ASNAS"
    version u16      currently 1
    count   u32      number of named tensors
    then per tensor:
        name_len u16
        name     utf-8 bytes
        rank     u32
        dims     rank * u32
        payload  prod(dims) * f32, C order

Writes go to a temp file in the destination directory followed by an
atomic rename, so a crash mid-write never leaves a truncated file under
the target name.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from ..errors import CheckpointError

MAGIC = b"ASNAS"
VERSION = 1


def save_checkpoint(path, arrays):
    """Write ``{name: ndarray}`` (values coerced to float32)."""
    items = list(arrays.items())
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<H", VERSION)
    blob += struct.pack("<I", len(items))
    for name, arr in items:
        data = np.ascontiguousarray(arr, dtype=np.float32)
        enc = name.encode("utf-8")
        if len(enc) > 0xFFFF:
            raise CheckpointError(f"tensor name too long: {name[:40]}...")
        blob += struct.pack("<H", len(enc))
        blob += enc
        blob += struct.pack("<I", data.ndim)
        blob += struct.pack(f"<{data.ndim}I", *data.shape)
        blob += data.tobytes(order="C")
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(bytes(blob))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, buf, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise CheckpointError(
                f"{self.path}: truncated (wanted {n} bytes at offset {self.pos}, "
                f"file has {len(self.buf)})"
            )
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u16(self):
        return struct.unpack("<H", self.take(2))[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path):
    """Read a container back into ``{name: float32 ndarray}``."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    r = _Reader(buf, path)
    magic = r.take(len(MAGIC))
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    version = r.u16()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    count = r.u32()
    out = {}
    for _ in range(count):
        name_len = r.u16()
        try:
            name = r.take(name_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"{path}: undecodable tensor name") from exc
        rank = r.u32()
        if rank > 8:
            raise CheckpointError(f"{path}: implausible rank {rank} for {name!r}")
        dims = tuple(r.u32() for _ in range(rank))
        numel = 1
        for d in dims:
            numel *= d
        payload = r.take(numel * 4)
        arr = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
        if name in out:
            raise CheckpointError(f"{path}: duplicate tensor name {name!r}")
        out[name] = arr
    if r.pos != len(buf):
        raise CheckpointError(
            f"{path}: {len(buf) - r.pos} trailing bytes after last tensor"
        )
    return out
