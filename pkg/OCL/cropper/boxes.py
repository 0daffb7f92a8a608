"""Box-level crop primitives: random resized crop, dilation, shifting, minimum-size recentering."""

from __future__ import annotations

import math
from typing import Tuple

from OCL.errors import CropError
from OCL.imgcore import BBox, ImageRGB, Rng, resize_bilinear

MAX_ATTEMPTS = 10


def _round(v: float) -> int:
    return int(math.floor(v + 0.5))


def _snap(v: float) -> float:
    # absorb float noise such as 0.1 * 300 / 2 = 15.000000000000002 before ceil/floor
    return round(v, 9)


def _check_region(img_w: int, img_h: int, region: BBox) -> BBox:
    clipped = region.clip(img_w, img_h)
    if clipped is None:
        raise CropError(f"crop region {region.to_list()} is empty after clipping to {img_w}x{img_h}")
    return clipped


def rrc_box(
    region: BBox,
    scale_lo: float,
    scale_hi: float,
    ratio_lo: float,
    ratio_hi: float,
    rng: Rng,
) -> BBox:
    """Sample the random-resized-crop rectangle inside ``region`` (geometry only).

    Up to ten draws of area fraction u ~ U[scale_lo, scale_hi] and aspect a with
    log a ~ U[log ratio_lo, log ratio_hi]; the first (w, h) that fits is placed
    uniformly. Otherwise the largest centre crop within the ratio bounds.
    """
    if not 0 < scale_lo <= scale_hi <= 1:
        raise CropError(f"invalid scale bounds [{scale_lo}, {scale_hi}]")
    if not 0 < ratio_lo <= ratio_hi:
        raise CropError(f"invalid ratio bounds [{ratio_lo}, {ratio_hi}]")
    area = region.area
    log_lo, log_hi = math.log(ratio_lo), math.log(ratio_hi)
    for _ in range(MAX_ATTEMPTS):
        target_area = area * rng.uniform(scale_lo, scale_hi)
        aspect = math.exp(rng.uniform(log_lo, log_hi))
        w = _round(math.sqrt(target_area * aspect))
        h = _round(math.sqrt(target_area / aspect))
        if 0 < w <= region.w and 0 < h <= region.h:
            x = region.x + rng.integers(0, region.w - w + 1)
            y = region.y + rng.integers(0, region.h - h + 1)
            return BBox(x, y, w, h)

    in_ratio = region.w / region.h
    if in_ratio < ratio_lo:
        w = region.w
        h = min(region.h, max(1, _round(w / ratio_lo)))
    elif in_ratio > ratio_hi:
        h = region.h
        w = min(region.w, max(1, _round(h * ratio_hi)))
    else:
        w, h = region.w, region.h
    return BBox(region.x + (region.w - w) // 2, region.y + (region.h - h) // 2, w, h)


def random_resized_crop(
    img: ImageRGB,
    region: BBox,
    scale_lo: float,
    scale_hi: float,
    ratio_lo: float,
    ratio_hi: float,
    target: int,
    rng: Rng,
) -> Tuple[ImageRGB, BBox]:
    region = _check_region(img.width, img.height, region)
    box = rrc_box(region, scale_lo, scale_hi, ratio_lo, ratio_hi, rng)
    return resize_bilinear(img.crop(box), target, target), box


def dilate_box(box: BBox, delta: float, img_w: int, img_h: int) -> BBox:
    """Grow by delta * image size, half on each side, then clip to the image."""
    if delta < 0:
        raise CropError(f"dilation must be non-negative, got {delta}")
    if delta == 0:
        return box.clip(img_w, img_h) or box
    pad_x = delta * img_w / 2.0
    pad_y = delta * img_h / 2.0
    grown = BBox.from_edges(
        _snap(box.x - pad_x),
        _snap(box.y - pad_y),
        min(_snap(box.x2 + pad_x), img_w),
        min(_snap(box.y2 + pad_y), img_h),
    )
    return grown if grown is not None else box


def shift_box(box: BBox, shift_lo: float, shift_hi: float, rng: Rng, img_w: int, img_h: int) -> BBox:
    """Move the centre by d ~ U[lo, hi] at a uniform angle, keeping the size; clip to the image.

    The moved centre is clamped into the image first; if clipping still leaves
    nothing the original box comes back.
    """
    if shift_lo > shift_hi or shift_lo < 0:
        raise CropError(f"invalid shift range [{shift_lo}, {shift_hi}]")
    d = rng.uniform(shift_lo, shift_hi)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    cx, cy = box.center
    ncx = min(max(cx + d * math.cos(theta), 0.0), float(img_w))
    ncy = min(max(cy + d * math.sin(theta), 0.0), float(img_h))
    x1 = _round(ncx - box.w / 2.0)
    y1 = _round(ncy - box.h / 2.0)
    moved = BBox.from_edges(max(x1, 0), max(y1, 0), min(x1 + box.w, img_w), min(y1 + box.h, img_h))
    return moved if moved is not None else box


def min_size_recenter(box: BBox, min_side: int, img_w: int, img_h: int) -> BBox:
    """Grow any side shorter than ``min_side`` around the box centre, then slide inside the image."""
    if min_side > min(img_w, img_h):
        raise CropError(
            f"minimum crop side {min_side} exceeds image {img_w}x{img_h}", code="MIN_SIDE_TOO_LARGE"
        )
    if box.w >= min_side and box.h >= min_side:
        return box
    w = min(max(box.w, min_side), img_w)
    h = min(max(box.h, min_side), img_h)
    cx, cy = box.center
    x = min(max(_round(cx - w / 2.0), 0), img_w - w)
    y = min(max(_round(cy - h / 2.0), 0), img_h - h)
    return BBox(x, y, w, h)
