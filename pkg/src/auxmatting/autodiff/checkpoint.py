"""CKPT parameter files.

Layout: ``b"CKPT"``, u32 entry count, then per entry a u16 name length, the
UTF-8 name, a u8 rank, ``rank`` u32 dimensions and the float32 data. All
integers and floats are little-endian.
"""
from __future__ import annotations

import struct

import numpy as np

from ..imgcore import atomic_write

MAGIC = b"CKPT"


def save_checkpoint(path, params):
    chunks = [MAGIC, struct.pack("<I", len(params))]
    for name, arr in params.items():
        arr = np.asarray(arr)
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)) + raw)
        chunks.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    atomic_write(path, lambda fh: fh.write(b"".join(chunks)))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a CKPT file")
    (count,) = struct.unpack_from("<I", raw, 4)
    pos = 8
    params = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        name = raw[pos:pos + nlen].decode("utf-8")
        pos += nlen
        (rank,) = struct.unpack_from("<B", raw, pos)
        pos += 1
        dims = struct.unpack_from(f"<{rank}I", raw, pos)
        pos += 4 * rank
        n = int(np.prod(dims)) if rank else 1
        params[name] = np.frombuffer(raw, dtype="<f4", count=n, offset=pos).astype(np.float32).reshape(dims)
        pos += 4 * n
    if pos != len(raw):
        raise ValueError(f"{path}: trailing bytes in CKPT file")
    return params
