"""Integer pixel rectangles.

Boxes are ``[x, y, w, h]`` with exclusive right/bottom edges (``x2 = x + w``).
Clipping always truncates toward the interior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from OCL.errors import GeometryError


@dataclass(frozen=True, order=True)
class BBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                object.__setattr__(self, name, int(value))
        if self.x < 0 or self.y < 0:
            raise GeometryError(f"box origin must be non-negative, got {self.to_list()}", code="BOX_NEGATIVE_ORIGIN")
        if self.w <= 0 or self.h <= 0:
            raise GeometryError(f"box must have positive area, got {self.to_list()}", code="BOX_EMPTY")

    # --- constructors ---
    @classmethod
    def from_edges(cls, x1: float, y1: float, x2: float, y2: float) -> Optional["BBox"]:
        """Box from real-valued edges, truncated toward the interior; None when empty."""
        ix1 = max(0, math.ceil(x1))
        iy1 = max(0, math.ceil(y1))
        ix2 = math.floor(x2)
        iy2 = math.floor(y2)
        if ix2 <= ix1 or iy2 <= iy1:
            return None
        return cls(ix1, iy1, ix2 - ix1, iy2 - iy1)

    @classmethod
    def from_list(cls, values: Sequence[int]) -> "BBox":
        if len(values) != 4:
            raise GeometryError(f"box needs 4 values [x, y, w, h], got {list(values)}", code="BOX_ARITY")
        return cls(*(int(v) for v in values))

    @classmethod
    def full(cls, width: int, height: int) -> "BBox":
        return cls(0, 0, width, height)

    # --- derived geometry ---
    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def to_list(self) -> List[int]:
        return [self.x, self.y, self.w, self.h]

    def inside(self, width: int, height: int) -> bool:
        return self.x2 <= width and self.y2 <= height

    def contains(self, other: "BBox") -> bool:
        return self.x <= other.x and self.y <= other.y and other.x2 <= self.x2 and other.y2 <= self.y2

    def clip(self, width: int, height: int) -> Optional["BBox"]:
        return intersect(self, BBox(0, 0, width, height))


def intersect(a: BBox, b: BBox) -> Optional[BBox]:
    """Axis-aligned intersection; None when the overlap has zero area."""
    x1 = max(a.x, b.x)
    y1 = max(a.y, b.y)
    x2 = min(a.x2, b.x2)
    y2 = min(a.y2, b.y2)
    if x2 <= x1 or y2 <= y1:
        return None
    return BBox(x1, y1, x2 - x1, y2 - y1)


def iou(a: BBox, b: BBox) -> float:
    inter = intersect(a, b)
    if inter is None:
        return 0.0
    union = a.area + b.area - inter.area
    return inter.area / union


def union_area(boxes: Iterable[BBox]) -> int:
    """Pixel area covered by the union of boxes (coordinate-compressed sweep)."""
    boxes = list(boxes)
    if not boxes:
        return 0
    xs = sorted({b.x for b in boxes} | {b.x2 for b in boxes})
    total = 0
    for left, right in zip(xs, xs[1:]):
        spans = sorted((b.y, b.y2) for b in boxes if b.x <= left and b.x2 >= right)
        covered = 0
        cur_start, cur_end = None, None
        for s, e in spans:
            if cur_end is None or s > cur_end:
                if cur_end is not None:
                    covered += cur_end - cur_start
                cur_start, cur_end = s, e
            else:
                cur_end = max(cur_end, e)
        if cur_end is not None:
            covered += cur_end - cur_start
        total += covered * (right - left)
    return total
