"""Random resized crops and the object-aware view-pairing strategies."""

from OCL.cropper.boxes import dilate_box, min_size_recenter, random_resized_crop, rrc_box, shift_box
from OCL.cropper.dump import dump_pairs
from OCL.cropper.pairs import (
    PairPlan,
    ViewPair,
    compute_smin,
    plan_pair,
    render_pair,
    sample_pair,
    smin_from_fraction,
)
from OCL.cropper.strategies import MIXED_CHOICES, CropConfig, Role, Strategy

__all__ = [
    "CropConfig",
    "MIXED_CHOICES",
    "PairPlan",
    "Role",
    "Strategy",
    "ViewPair",
    "compute_smin",
    "dilate_box",
    "dump_pairs",
    "min_size_recenter",
    "plan_pair",
    "random_resized_crop",
    "render_pair",
    "rrc_box",
    "sample_pair",
    "shift_box",
    "smin_from_fraction",
]
