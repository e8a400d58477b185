"""Checkpoint serialization.

Little-endian binary layout:

    magic "CHLM" | version u32 | config_len u32 | config JSON (utf-8)
    | param count u32 | per param: name_len u32, name, ndim u32,
      dims u32..., float64 raw bytes
    | first moments (same layout) | second moments (same layout)
    | step u64

The config JSON carries the model configuration plus whatever pipeline
context the caller supplies (vocabulary, label names, chunking and
ranking settings), so evaluation can validate compatibility. Raw float64
bytes make save -> load -> forward reproduce outputs bitwise.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from typing import BinaryIO

import numpy as np

from ..errors import DataError
from .model import ModelConfig, ModelState

CHECKPOINT_MAGIC = b"CHLM"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, state: ModelState, extra: dict | None = None) -> None:
    config_block = {"model": asdict(state.config), "extra": extra or {}}
    blob = json.dumps(config_block, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        _write_blobs(fh, state.params)
        _write_blobs(fh, state.moment1)
        _write_blobs(fh, state.moment2)
        fh.write(struct.pack("<Q", state.step))


def load_checkpoint(path) -> tuple[ModelState, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: bad checkpoint magic {magic!r}")
        version, blob_len = struct.unpack("<II", _read_exact(fh, 8))
        if version != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        config_block = json.loads(_read_exact(fh, blob_len).decode("utf-8"))
        params = _read_blobs(fh)
        moment1 = _read_blobs(fh)
        moment2 = _read_blobs(fh)
        (step,) = struct.unpack("<Q", _read_exact(fh, 8))
    config = ModelConfig(**config_block["model"])
    state = ModelState(config, params, moment1, moment2, step)
    return state, config_block.get("extra", {})


def _write_blobs(fh: BinaryIO, blobs: dict[str, np.ndarray]) -> None:
    fh.write(struct.pack("<I", len(blobs)))
    for name in sorted(blobs):
        arr = np.ascontiguousarray(blobs[name], dtype="<f8")
        encoded = name.encode("utf-8")
        fh.write(struct.pack("<I", len(encoded)))
        fh.write(encoded)
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def _read_blobs(fh: BinaryIO) -> dict[str, np.ndarray]:
    (count,) = struct.unpack("<I", _read_exact(fh, 4))
    blobs: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", _read_exact(fh, 4))
        name = _read_exact(fh, name_len).decode("utf-8")
        (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
        shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
        n_items = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(_read_exact(fh, 8 * n_items), dtype="<f8")
        blobs[name] = data.reshape(shape).copy()
    return blobs


def _read_exact(fh: BinaryIO, size: int) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise DataError("truncated checkpoint file")
    return data
