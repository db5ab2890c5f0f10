"""Binary checkpoint format.

Layout (all integers little-endian, unsigned):

    bytes 0..3   magic "GTCN"
    u32          format version (currently 1)
    u32          config byte length, then that many UTF-8 bytes
                 (the canonical key=value text of ModelConfig)
    u32          parameter count
    per parameter, in store order:
        u16      name byte length, then the UTF-8 name
        u8       rank
        u32[rank] dims
        f64[prod(dims)] values, C order, little-endian

The config text is canonical (serialize-parse-serialize is identity), so
save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .errors import CheckpointCorruptError, CheckpointFormatError
from .tensor import ParameterStore

MAGIC = b"GTCN"
VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    arrays: dict  # name -> float64 ndarray, insertion-ordered


def save_checkpoint(path, params: ParameterStore, config: ModelConfig):
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    cfg_bytes = config.to_text().encode("utf-8")
    chunks.append(struct.pack("<I", len(cfg_bytes)))
    chunks.append(cfg_bytes)
    chunks.append(struct.pack("<I", len(params)))
    for name, tensor in params.items():
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name_bytes)))
        chunks.append(name_bytes)
        arr = tensor.data
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.astype("<f8", copy=False).tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointCorruptError(
                f"truncated checkpoint: wanted {n} bytes at offset {self.pos}, "
                f"file has {len(self.blob)}"
            )
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path) -> Checkpoint:
    blob = Path(path).read_bytes()
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise CheckpointFormatError(f"bad magic in {path}")
    version = r.u32()
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    cfg_len = r.u32()
    config = ModelConfig.from_text(r.take(cfg_len).decode("utf-8"))
    n_params = r.u32()
    arrays = {}
    for _ in range(n_params):
        name = r.take(r.u16()).decode("utf-8")
        rank = r.u8()
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank)) if rank else ()
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(dims)
        if name in arrays:
            raise CheckpointCorruptError(f"duplicate parameter {name!r}")
        arrays[name] = np.ascontiguousarray(data, dtype=np.float64)
    if r.pos != len(blob):
        raise CheckpointCorruptError(f"{len(blob) - r.pos} trailing bytes after parameters")
    return Checkpoint(config=config, arrays=arrays)
