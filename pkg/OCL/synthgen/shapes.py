"""Class-determined shapes and colours, rasterised as anti-aliased coverage masks."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Dict, Tuple

import numpy as np

SUPERSAMPLE = 4

SHAPES = ("circle", "square", "triangle", "cross", "ring", "diamond", "star", "bar")
COLORS: Tuple[Tuple[int, int, int], ...] = (
    (230, 40, 40),
    (40, 200, 60),
    (40, 80, 230),
    (240, 210, 30),
)
MAX_CLASSES = len(SHAPES) * len(COLORS)


def class_style(class_id: int) -> Tuple[str, Tuple[int, int, int]]:
    """class = shape + 8 * colour."""
    return SHAPES[class_id % len(SHAPES)], COLORS[(class_id // len(SHAPES)) % len(COLORS)]


# u, v in [-1, 1], v grows downwards
def _circle(u, v):
    return u * u + v * v <= 1.0


def _square(u, v):
    return (np.abs(u) <= 0.8) & (np.abs(v) <= 0.8)


def _triangle(u, v):
    return (v >= -0.9) & (v <= 0.9) & (np.abs(u) <= 0.95 * (v + 0.9) / 1.8)


def _cross(u, v):
    return ((np.abs(u) <= 0.3) & (np.abs(v) <= 0.9)) | ((np.abs(v) <= 0.3) & (np.abs(u) <= 0.9))


def _ring(u, v):
    r2 = u * u + v * v
    return (r2 <= 1.0) & (r2 >= 0.25)


def _diamond(u, v):
    return np.abs(u) + np.abs(v) <= 1.0


def _star(u, v):
    r = np.sqrt(u * u + v * v)
    theta = np.arctan2(v, u)
    return r <= 0.5 + 0.45 * np.abs(np.cos(2.5 * theta))


def _bar(u, v):
    return (np.abs(u) <= 0.95) & (np.abs(v) <= 0.35)


_INSIDE: Dict[str, Callable] = {
    "circle": _circle,
    "square": _square,
    "triangle": _triangle,
    "cross": _cross,
    "ring": _ring,
    "diamond": _diamond,
    "star": _star,
    "bar": _bar,
}


@lru_cache(maxsize=512)
def _coverage_cached(shape: str, side: int) -> np.ndarray:
    n = side * SUPERSAMPLE
    coords = (np.arange(n, dtype=np.float64) + 0.5) / n * 2.0 - 1.0
    v, u = np.meshgrid(coords, coords, indexing="ij")
    inside = _INSIDE[shape](u, v).astype(np.float64)
    cov = inside.reshape(side, SUPERSAMPLE, side, SUPERSAMPLE).mean(axis=(1, 3))
    cov.setflags(write=False)
    return cov


def coverage(shape: str, side: int) -> np.ndarray:
    """(side, side) fraction of each pixel covered by the shape."""
    if shape not in _INSIDE:
        raise KeyError(f"unknown shape {shape!r}")
    return _coverage_cached(shape, int(side))


def tight_extent(shape: str, side: int) -> Tuple[int, int, int, int]:
    """(x, y, w, h) of covered pixels within the side x side cell."""
    cov = coverage(shape, side)
    rows = np.flatnonzero(cov.any(axis=1))
    cols = np.flatnonzero(cov.any(axis=0))
    return int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1)
