"""Planning and rendering of two-view crop pairs for every pairing strategy.

``plan_pair`` draws all randomness and returns geometry only; ``render_pair``
turns a plan into pixels. ``sample_pair`` is the two composed, so the overlap
analytics can reuse the exact draws of training without decoding images.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Tuple

from OCL.cropper.boxes import dilate_box, min_size_recenter, rrc_box, shift_box
from OCL.cropper.strategies import MIXED_CHOICES, CropConfig, Role, Strategy
from OCL.errors import CropError
from OCL.imgcore import BBox, ImageRGB, Rng, resize_bilinear

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairPlan:
    strategy: Strategy
    src_a: BBox
    src_b: BBox
    role_a: Role
    role_b: Role
    flip_a: bool = False
    flip_b: bool = False
    proposal_used: Optional[BBox] = None

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "src_a": self.src_a.to_list(),
            "src_b": self.src_b.to_list(),
            "role_a": self.role_a.value,
            "role_b": self.role_b.value,
            "flip_a": self.flip_a,
            "flip_b": self.flip_b,
            "proposal_used": self.proposal_used.to_list() if self.proposal_used else None,
        }


@dataclass(frozen=True)
class ViewPair:
    view_a: ImageRGB
    view_b: ImageRGB
    role_a: Role
    role_b: Role
    src_a: BBox
    src_b: BBox
    proposal_used: Optional[BBox] = None
    plan: Optional[PairPlan] = None


def compute_smin(
    proposals: Mapping[str, Sequence],
    image_sizes: Mapping[str, Tuple[int, int]],
    scale_lo: float = 0.2,
) -> float:
    """scale_lo / mean(proposal area / image area), clamped to [scale_lo, 1]."""
    fractions = []
    for key, props in proposals.items():
        if key not in image_sizes:
            raise CropError(f"no image size known for cached image {key}")
        w, h = image_sizes[key]
        for p in props:
            box = getattr(p, "box", p)
            fractions.append(box.area / float(w * h))
    if not fractions:
        raise CropError("cannot compute s_min from an empty proposal cache", code="SMIN_EMPTY")
    return smin_from_fraction(sum(fractions) / len(fractions), scale_lo)


def smin_from_fraction(avg_fraction: float, scale_lo: float = 0.2) -> float:
    if avg_fraction <= 0:
        raise CropError(f"average proposal fraction must be positive, got {avg_fraction}")
    return min(max(scale_lo / avg_fraction, scale_lo), 1.0)


def _choose(boxes: Sequence[BBox], rng: Rng) -> BBox:
    return boxes[rng.integers(0, len(boxes))]


def plan_pair(
    width: int,
    height: int,
    boxes: Optional[Sequence[BBox]],
    strategy: Strategy,
    cfg: CropConfig,
    s_min: float,
    rng: Rng,
) -> PairPlan:
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.MIXED:
        strategy = MIXED_CHOICES[rng.integers(0, len(MIXED_CHOICES))]
    if strategy.needs_boxes and not boxes:
        raise CropError(f"strategy {strategy.value} needs a non-empty box source", code="NO_BOXES")
    if cfg.s_min_override is not None:
        s_min = cfg.s_min_override
    s_min = min(max(s_min, 1e-6), 1.0)

    image = BBox.full(width, height)
    scene = (cfg.scale_lo, cfg.scale_hi)
    box_rel = (s_min, 1.0)

    def crop(region: BBox, scales: Tuple[float, float]) -> BBox:
        clipped = region.clip(width, height)
        if clipped is None:
            raise CropError(f"crop region {region.to_list()} is empty after clipping")
        return rrc_box(clipped, scales[0], scales[1], cfg.ratio_lo, cfg.ratio_hi, rng)

    chosen = None
    if strategy is Strategy.SCENE_SCENE:
        src_a = crop(image, scene)
        src_b = crop(image, scene)
    else:
        chosen = _choose(list(boxes), rng)
        p = min_size_recenter(chosen, cfg.min_side, width, height)
        if strategy in (Strategy.OBJ_SCENE, Strategy.GT_SCENE):
            src_a = crop(p, box_rel)
            src_b = crop(image, scene)
        elif strategy in (Strategy.OBJ_OBJ_DILATE, Strategy.GT_DILATE):
            d = dilate_box(p, cfg.delta, width, height)
            src_a = crop(p, box_rel)
            src_b = crop(d, box_rel)
        elif strategy is Strategy.OBJ_OBJ_SHIFT:
            s = shift_box(p, cfg.shift_lo, cfg.shift_hi, rng, width, height)
            src_a = crop(p, box_rel)
            src_b = crop(s, box_rel)
        else:  # DILATE_DILATE
            d = dilate_box(p, cfg.delta, width, height)
            src_a = crop(d, box_rel)
            src_b = crop(d, box_rel)

    flip_a = cfg.flip_p > 0 and rng.bernoulli(cfg.flip_p)
    flip_b = cfg.flip_p > 0 and rng.bernoulli(cfg.flip_p)
    role_a, role_b = strategy.roles
    return PairPlan(
        strategy=strategy,
        src_a=src_a,
        src_b=src_b,
        role_a=role_a,
        role_b=role_b,
        flip_a=flip_a,
        flip_b=flip_b,
        proposal_used=chosen,
    )


def _render_view(img: ImageRGB, box: BBox, flip: bool, target: int) -> ImageRGB:
    view = resize_bilinear(img.crop(box), target, target)
    return view.flip_horizontal() if flip else view


def render_pair(img: ImageRGB, plan: PairPlan, target: int) -> ViewPair:
    return ViewPair(
        view_a=_render_view(img, plan.src_a, plan.flip_a, target),
        view_b=_render_view(img, plan.src_b, plan.flip_b, target),
        role_a=plan.role_a,
        role_b=plan.role_b,
        src_a=plan.src_a,
        src_b=plan.src_b,
        proposal_used=plan.proposal_used,
        plan=plan,
    )


def sample_pair(
    img: ImageRGB,
    boxes: Optional[Iterable[BBox]],
    strategy: Strategy,
    cfg: CropConfig,
    s_min: float,
    rng: Rng,
) -> ViewPair:
    plan = plan_pair(img.width, img.height, list(boxes) if boxes is not None else None, strategy, cfg, s_min, rng)
    return render_pair(img, plan, cfg.target)
