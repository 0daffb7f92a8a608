"""Normed-gradient (NG) features and the per-size window grids built on them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from OCL.imgcore import BBox, ImageRGB, resize_array

TEMPLATE = 8


@dataclass(frozen=True, eq=False)
class NgMap:
    values: np.ndarray  # (height, width) uint8

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])


def grayscale(img: ImageRGB) -> np.ndarray:
    px = img.pixels.astype(np.float64)
    gray = 0.299 * px[..., 0] + 0.587 * px[..., 1] + 0.114 * px[..., 2]
    return np.floor(gray + 0.5).astype(np.int32)


def normed_gradient(img: ImageRGB) -> NgMap:
    """NG = min(|gx| + |gy|, 255) with gx, gy half the central differences (edge-replicated).

    The half-sum is floored: NG = min((|I[x+1]-I[x-1]| + |I[y+1]-I[y-1]|) // 2, 255).
    """
    gray = grayscale(img)
    padded = np.pad(gray, 1, mode="edge")
    dx = padded[1:-1, 2:] - padded[1:-1, :-2]
    dy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    ng = np.minimum((np.abs(dx) + np.abs(dy)) // 2, 255).astype(np.uint8)
    return NgMap(ng)


@dataclass(frozen=True, eq=False)
class WindowGrid:
    """NG map resized so that one 8x8 window covers a (size_w, size_h) box of the source."""

    size: Tuple[int, int]
    plane: np.ndarray  # float64, NG / 255
    src_width: int
    src_height: int

    @property
    def scale_x(self) -> float:
        return self.src_width / self.plane.shape[1]

    @property
    def scale_y(self) -> float:
        return self.src_height / self.plane.shape[0]

    @property
    def positions(self) -> Tuple[int, int]:
        """Number of window positions along (x, y)."""
        return self.plane.shape[1] - TEMPLATE + 1, self.plane.shape[0] - TEMPLATE + 1

    def window(self, col: int, row: int) -> np.ndarray:
        return self.plane[row : row + TEMPLATE, col : col + TEMPLATE].reshape(-1)

    def scores(self, weights: np.ndarray, bias: float) -> np.ndarray:
        """Stage-1 score of every window, shape (rows, cols)."""
        windows = sliding_window_view(self.plane, (TEMPLATE, TEMPLATE))
        return np.tensordot(windows, weights.reshape(TEMPLATE, TEMPLATE), axes=([2, 3], [0, 1])) + bias

    def box_of(self, col: int, row: int) -> Optional[BBox]:
        x1 = np.floor(col * self.scale_x + 0.5)
        y1 = np.floor(row * self.scale_y + 0.5)
        x2 = np.floor((col + TEMPLATE) * self.scale_x + 0.5)
        y2 = np.floor((row + TEMPLATE) * self.scale_y + 0.5)
        return BBox.from_edges(float(x1), float(y1), min(float(x2), self.src_width), min(float(y2), self.src_height))

    def locate(self, box: BBox) -> Tuple[int, int]:
        """Window position whose centre is nearest to the box centre."""
        cx, cy = box.center
        cols, rows = self.positions
        col = int(np.floor(cx / self.scale_x - TEMPLATE / 2 + 0.5))
        row = int(np.floor(cy / self.scale_y - TEMPLATE / 2 + 0.5))
        return min(max(col, 0), cols - 1), min(max(row, 0), rows - 1)


def window_grid(ng: NgMap, size: Tuple[int, int]) -> Optional[WindowGrid]:
    """Grid for one quantized size; None when the resized map cannot hold a single window."""
    size_w, size_h = size
    out_w = int(np.floor(ng.width * TEMPLATE / size_w + 0.5))
    out_h = int(np.floor(ng.height * TEMPLATE / size_h + 0.5))
    if out_w < TEMPLATE or out_h < TEMPLATE:
        return None
    plane = resize_array(ng.values, out_w, out_h) / 255.0
    return WindowGrid(size=(size_w, size_h), plane=plane, src_width=ng.width, src_height=ng.height)
