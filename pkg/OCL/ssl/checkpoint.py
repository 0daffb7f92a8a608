"""Versioned binary checkpoint of the complete training state.

Layout (little-endian)::

    b"OBJCROP1" | u32 version | u32 json_len | canonical JSON
    u32 n_tensors | per tensor (sorted by name):
        u16 name_len | name utf-8 | u32 ndim | u32[ndim] dims | f64[prod(dims)]

The JSON carries the training config, scalar state (epoch, step, queue
pointer/size), the root RNG state and the per-epoch metric rows.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from OCL.errors import (
    BadMagicError,
    CheckpointError,
    CheckpointVersionError,
    MissingInputError,
    ShapeMismatchError,
    TruncatedFileError,
)
from OCL.imgcore import Rng
from OCL.ssl.network import copy_params
from OCL.ssl.queue import NegativeQueue
from OCL.ssl.state import MetricRow, ModelState, TrainConfig

MAGIC = b"OBJCROP1"
VERSION = 1


def _tensors(state: ModelState) -> Dict[str, np.ndarray]:
    out = {f"q.{k}": v for k, v in state.params_q.items()}
    out.update({f"k.{k}": v for k, v in state.params_k.items()})
    out["input.mean"] = state.input_mean
    out["input.std"] = state.input_std
    out["queue.data"] = state.queue.data
    out["queue.tags"] = state.queue.tags.astype(np.float64)
    return out


def _expected_shapes(cfg: TrainConfig) -> Dict[str, Tuple[int, ...]]:
    arch = cfg.architecture()
    shapes = {}
    for name, shape in arch.shapes().items():
        shapes[f"q.{name}"] = shape
        shapes[f"k.{name}"] = shape
    shapes["input.mean"] = (3,)
    shapes["input.std"] = (3,)
    shapes["queue.data"] = (cfg.queue_size, arch.embed_dim)
    shapes["queue.tags"] = (cfg.queue_size,)
    return shapes


def checkpoint_to_bytes(state: ModelState, cfg: TrainConfig) -> bytes:
    meta = {
        "config": cfg.to_dict(),
        "state": {
            "epoch": state.epoch,
            "step": state.step,
            "queue_ptr": state.queue.ptr,
            "queue_size": state.queue.size,
        },
        "rng": Rng(cfg.seed).state(),
        "metrics": [row.to_list() for row in state.metrics],
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tensors = _tensors(state)
    parts = [MAGIC, struct.pack("<II", VERSION, len(meta_bytes)), meta_bytes, struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        raw_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.raw):
            raise TruncatedFileError(f"checkpoint truncated while reading {what} at byte {self.pos}")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def checkpoint_from_bytes(raw: bytes) -> Tuple[ModelState, TrainConfig]:
    reader = _Reader(bytes(raw))
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version, meta_len = reader.unpack("<II", "header")
    if version != VERSION:
        raise CheckpointVersionError(f"checkpoint version {version} is not supported (expected {VERSION})")
    try:
        meta = json.loads(reader.take(meta_len, "config JSON").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"checkpoint config block is not valid JSON: {exc}") from exc
    cfg = TrainConfig.from_dict(meta["config"])
    expected = _expected_shapes(cfg)

    (n_tensors,) = reader.unpack("<I", "tensor count")
    tensors: Dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = reader.unpack("<H", "tensor name length")
        name = reader.take(name_len, "tensor name").decode("utf-8")
        (ndim,) = reader.unpack("<I", f"{name} rank")
        dims = reader.unpack(f"<{ndim}I", f"{name} dims") if ndim else ()
        count = int(np.prod(dims)) if dims else 1
        data = np.frombuffer(reader.take(8 * count, f"{name} data"), dtype="<f8").astype(np.float64)
        if name not in expected:
            raise ShapeMismatchError(f"unexpected tensor {name} in checkpoint")
        if tuple(dims) != expected[name]:
            raise ShapeMismatchError(f"{name}: checkpoint shape {tuple(dims)} != expected {expected[name]}")
        tensors[name] = data.reshape(dims)
    missing = sorted(set(expected) - set(tensors))
    if missing:
        raise ShapeMismatchError(f"checkpoint lacks tensors: {', '.join(missing)}")
    if reader.pos != len(reader.raw):
        raise CheckpointError(f"{len(reader.raw) - reader.pos} trailing byte(s) after last tensor")

    arch = cfg.architecture()
    names = arch.shapes()
    scalars = meta["state"]
    queue = NegativeQueue(cfg.queue_size, arch.embed_dim).load(
        tensors["queue.data"], tensors["queue.tags"], scalars["queue_ptr"], scalars["queue_size"]
    )
    state = ModelState(
        arch=arch,
        params_q=copy_params({n: tensors[f"q.{n}"] for n in names}),
        params_k=copy_params({n: tensors[f"k.{n}"] for n in names}),
        input_mean=tensors["input.mean"].copy(),
        input_std=tensors["input.std"].copy(),
        queue=queue,
        epoch=int(scalars["epoch"]),
        step=int(scalars["step"]),
        metrics=[MetricRow(int(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4])) for r in meta["metrics"]],
    )
    return state, cfg


def save_checkpoint(path: Union[str, Path], state: ModelState, cfg: TrainConfig) -> Path:
    from OCL.runs import atomic_write_bytes

    return atomic_write_bytes(path, checkpoint_to_bytes(state, cfg))


def load_checkpoint(path: Union[str, Path]) -> Tuple[ModelState, TrainConfig]:
    p = Path(path)
    if not p.exists():
        raise MissingInputError(f"checkpoint not found: {p}")
    return checkpoint_from_bytes(p.read_bytes())
