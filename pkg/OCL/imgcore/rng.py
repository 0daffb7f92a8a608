"""Counter-based SplitMix64 random stream.

Draw ``i`` (1-based, counted across the life of the generator) is
``mix64(seed + i * 0x9E3779B97F4A7C15 mod 2**64)`` with the SplitMix64
finaliser. The integer stream depends only on (seed, counter), never on the
platform or numpy's own generators. Floats take the top 53 bits.
"""

from __future__ import annotations

import hashlib
import math
from typing import Dict, Tuple, Union

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / float(1 << 53)

Size = Union[None, int, Tuple[int, ...]]


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash64(key: Union[str, int, bytes]) -> int:
    """Stable 64-bit hash of a string/int key (blake2b, not Python's salted hash)."""
    if isinstance(key, int):
        raw = str(key).encode("ascii")
    elif isinstance(key, str):
        raw = key.encode("utf-8")
    else:
        raw = bytes(key)
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")


def _mix_scalar(value: int) -> int:
    return int(_mix(np.array([value & _MASK64], dtype=np.uint64))[0])


class Rng:
    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK64
        self.counter = int(counter)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, counter={self.counter})"

    # --- state ---
    def state(self) -> Dict[str, int]:
        return {"seed": self.seed, "counter": self.counter}

    @classmethod
    def from_state(cls, state: Dict[str, int]) -> "Rng":
        return cls(int(state["seed"]), int(state["counter"]))

    def derive(self, key: Union[str, int, bytes]) -> "Rng":
        """Independent child stream: seed' = mix64(seed XOR hash64(key))."""
        return Rng(_mix_scalar(self.seed ^ hash64(key)))

    # --- raw stream ---
    def u64(self, n: int) -> np.ndarray:
        n = int(n)
        if n < 0:
            raise ValueError("n must be non-negative")
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix(np.uint64(self.seed) + idx * _GAMMA)

    # --- derived distributions ---
    @staticmethod
    def _count(size: Size) -> int:
        if size is None:
            return 1
        if isinstance(size, int):
            return size
        return int(math.prod(size))

    @staticmethod
    def _shape(values: np.ndarray, size: Size):
        if size is None:
            return values[0].item()
        return values.reshape(size)

    def random(self, size: Size = None):
        vals = (self.u64(self._count(size)) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return self._shape(vals, size)

    def uniform(self, lo: float, hi: float, size: Size = None):
        u = self.random(size if size is not None else 1)
        vals = lo + (hi - lo) * np.asarray(u, dtype=np.float64)
        if size is None:
            return float(vals[0])
        return vals

    def integers(self, lo: int, hi: int, size: Size = None):
        """Integers in [lo, hi). Uses floor(u * span); bias is below 2**-40 for spans used here."""
        if hi <= lo:
            raise ValueError(f"empty integer range [{lo}, {hi})")
        u = np.asarray(self.random(size if size is not None else 1), dtype=np.float64)
        vals = lo + np.floor(u * (hi - lo)).astype(np.int64)
        vals = np.minimum(vals, hi - 1)
        if size is None:
            return int(vals[0])
        return vals

    def normal(self, size: Size = None, loc: float = 0.0, scale: float = 1.0):
        """Box-Muller on two uniforms per value."""
        n = self._count(size)
        u = np.asarray(self.random(2 * n), dtype=np.float64)
        u1 = 1.0 - u[:n]
        u2 = u[n:]
        vals = loc + scale * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return self._shape(vals, size)

    def permutation(self, n: int) -> np.ndarray:
        keys = self.u64(n)
        return np.argsort(keys, kind="stable")

    def bernoulli(self, p: float) -> bool:
        return bool(self.random() < p)
