"""BING-style two-stage objectness model and its versioned binary file.

File layout (little-endian)::

    b"BINGMDL1"
    u32 n_weights (64) | u32 n_sizes
    f32[64] stage-1 template | f32 stage-1 bias
    f32[n_sizes] v | f32[n_sizes] t
    u32[2 * n_sizes] (w, h) pairs
    u32 recipe_len | recipe JSON (training settings, utf-8)
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from OCL.errors import MissingInputError, ModelFormatError, ModelVersionError
from OCL.objectness.features import TEMPLATE

logger = logging.getLogger(__name__)

MAGIC = b"BINGMDL1"
MAGIC_FAMILY = b"BINGMDL"
N_WEIGHTS = TEMPLATE * TEMPLATE
DEFAULT_SIDES = (16, 32, 64, 128, 256)
MAX_ASPECT = 4.0


def quantized_sizes(sides: Sequence[int] = DEFAULT_SIDES, max_aspect: float = MAX_ASPECT) -> List[Tuple[int, int]]:
    sizes = []
    for w in sides:
        for h in sides:
            if max(w / h, h / w) <= max_aspect:
                sizes.append((int(w), int(h)))
    return sizes


def as_f32(values) -> np.ndarray:
    """Round through float32 so in-memory values equal what the file stores."""
    return np.asarray(values, dtype="<f4").astype(np.float64)


@dataclass(eq=False)
class BingModel:
    stage1: np.ndarray
    bias: float
    sizes: List[Tuple[int, int]]
    calibration: np.ndarray  # (n_sizes, 2): v, t
    recipe: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.stage1 = as_f32(self.stage1).reshape(-1)
        self.bias = float(as_f32([self.bias])[0])
        self.sizes = [(int(w), int(h)) for w, h in self.sizes]
        self.calibration = as_f32(self.calibration).reshape(-1, 2)
        self.validate()

    def validate(self) -> None:
        if self.stage1.shape != (N_WEIGHTS,):
            raise ModelFormatError(f"stage-1 template needs {N_WEIGHTS} weights, got {self.stage1.size}")
        if len(self.sizes) != self.calibration.shape[0]:
            raise ModelFormatError(
                f"{len(self.sizes)} quantized sizes but {self.calibration.shape[0]} calibration pairs"
            )
        if len(set(self.sizes)) != len(self.sizes):
            raise ModelFormatError("duplicate quantized size in model")

    def calibrate(self, size_index: int, scores: np.ndarray) -> np.ndarray:
        v, t = self.calibration[size_index]
        return v * scores + t

    # --- serialisation ---
    def to_bytes(self) -> bytes:
        n = len(self.sizes)
        recipe = json.dumps(self.recipe, sort_keys=True, separators=(",", ":")).encode("utf-8")
        parts = [
            MAGIC,
            struct.pack("<II", N_WEIGHTS, n),
            self.stage1.astype("<f4").tobytes(),
            struct.pack("<f", self.bias),
            self.calibration[:, 0].astype("<f4").tobytes(),
            self.calibration[:, 1].astype("<f4").tobytes(),
            np.asarray(self.sizes, dtype="<u4").reshape(-1).tobytes(),
            struct.pack("<I", len(recipe)),
            recipe,
        ]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "BingModel":
        reader = _Reader(raw)
        magic = reader.take(len(MAGIC), "magic")
        if magic != MAGIC:
            if magic.startswith(MAGIC_FAMILY):
                raise ModelVersionError(f"unsupported model version {magic!r}, expected {MAGIC!r}")
            raise ModelFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        n_weights, n = struct.unpack("<II", reader.take(8, "counts"))
        if n_weights != N_WEIGHTS:
            raise ModelFormatError(f"stage-1 template needs {N_WEIGHTS} weights, file declares {n_weights}")
        stage1 = np.frombuffer(reader.take(4 * N_WEIGHTS, "stage-1 weights"), dtype="<f4")
        (bias,) = struct.unpack("<f", reader.take(4, "stage-1 bias"))
        v = np.frombuffer(reader.take(4 * n, "calibration v"), dtype="<f4")
        t = np.frombuffer(reader.take(4 * n, "calibration t"), dtype="<f4")
        sizes = np.frombuffer(reader.take(8 * n, "size list"), dtype="<u4").reshape(n, 2)
        (recipe_len,) = struct.unpack("<I", reader.take(4, "recipe length"))
        recipe = json.loads(reader.take(recipe_len, "recipe").decode("utf-8")) if recipe_len else {}
        return cls(
            stage1=stage1,
            bias=bias,
            sizes=[tuple(int(x) for x in row) for row in sizes],
            calibration=np.stack([v, t], axis=1) if n else np.zeros((0, 2)),
            recipe=recipe,
        )

    def save(self, path: Union[str, Path]) -> Path:
        from OCL.runs import atomic_write_bytes

        return atomic_write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BingModel":
        p = Path(path)
        if not p.exists():
            raise MissingInputError(f"BING model not found: {p}")
        return cls.from_bytes(p.read_bytes())


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.raw):
            raise ModelFormatError(f"model file truncated while reading {what} at byte {self.pos}")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk


def quantize_size(w: int, h: int, sizes: Sequence[Tuple[int, int]]) -> Tuple[int, int]:
    """Nearest quantized size in log2 space."""
    lw, lh = math.log2(w), math.log2(h)
    return min(sizes, key=lambda s: ((math.log2(s[0]) - lw) ** 2 + (math.log2(s[1]) - lh) ** 2, s))


def identity_calibration(n: int) -> np.ndarray:
    calib = np.zeros((n, 2))
    calib[:, 0] = 1.0
    return calib
