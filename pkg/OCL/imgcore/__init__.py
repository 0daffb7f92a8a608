"""Image buffers, box geometry, the seeded random stream and PPM I/O."""

from OCL.imgcore.geometry import BBox, intersect, iou, union_area
from OCL.imgcore.image import (
    ImageRGB,
    load_ppm,
    ppm_read,
    ppm_write,
    resize_array,
    resize_bilinear,
    round_to_u8,
    save_ppm,
)
from OCL.imgcore.rng import Rng, hash64

__all__ = [
    "BBox",
    "ImageRGB",
    "Rng",
    "hash64",
    "intersect",
    "iou",
    "load_ppm",
    "ppm_read",
    "ppm_write",
    "resize_array",
    "resize_bilinear",
    "round_to_u8",
    "save_ppm",
    "union_area",
]
