"""Versioned single-file binary checkpoint container.

Layout (little-endian):

    magic   8 bytes  b"ATFCHKPT"
    u32     format version
    u64     metadata length, then UTF-8 key=value lines
    u32     tensor count
    per tensor:
        u16 name length, name UTF-8
        u8  dtype code, u8 ndim, u64 * ndim shape
        u64 payload length, raw bytes

Tensors round-trip bit-exact. Any short read, bad magic, or unknown
version raises CheckpointError.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"ATFCHKPT"
FORMAT_VERSION = 1

_DTYPE_CODES = {
    np.dtype("float32"): 0,
    np.dtype("float64"): 1,
    np.dtype("int64"): 2,
    np.dtype("uint8"): 3,
    np.dtype("int32"): 4,
    np.dtype("float16"): 5,
    np.dtype("bool"): 6,
}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


def write_container(path: Path, metadata: dict[str, str], tensors: dict[str, np.ndarray]) -> None:
    meta_text = "".join(f"{k}={v}\n" for k, v in metadata.items()).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(meta_text)))
        fh.write(meta_text)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr)
            if arr.dtype not in _DTYPE_CODES:
                raise CheckpointError(f"unsupported tensor dtype {arr.dtype} for '{name}'")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            payload = arr.tobytes()
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(payload)


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint: wanted {n} bytes, got {len(data)}")
    return data


def read_container(path: Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint file not found: {path}")
    with open(path, "rb") as fh:
        if _read_exact(fh, len(MAGIC)) != MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format version {version}")
        (meta_len,) = struct.unpack("<Q", _read_exact(fh, 8))
        metadata = {}
        for line in _read_exact(fh, meta_len).decode("utf-8").splitlines():
            if line:
                key, _, value = line.partition("=")
                metadata[key] = value
        (count,) = struct.unpack("<I", _read_exact(fh, 4))
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2))
            name = _read_exact(fh, name_len).decode("utf-8")
            code, ndim = struct.unpack("<BB", _read_exact(fh, 2))
            if code not in _CODE_DTYPES:
                raise CheckpointError(f"unknown tensor dtype code {code} for '{name}'")
            shape = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim))
            (nbytes,) = struct.unpack("<Q", _read_exact(fh, 8))
            arr = np.frombuffer(_read_exact(fh, nbytes), dtype=_CODE_DTYPES[code]).reshape(shape)
            tensors[name] = arr.copy()
        if fh.read(1):
            raise CheckpointError(f"{path} has trailing bytes after the declared tensors")
    return metadata, tensors
