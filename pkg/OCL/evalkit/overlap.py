"""View-overlap statistics of a crop strategy, computed from pair geometry alone."""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from OCL.cropper import CropConfig, Strategy, plan_pair
from OCL.imgcore import BBox, Rng, intersect, iou, union_area
from OCL.objectness.sources import GroundTruthSource, ProposalSource
from OCL.synthgen.manifest import DatasetManifest

logger = logging.getLogger(__name__)


def object_fraction(region: BBox, gt_boxes: Sequence[BBox]) -> float:
    """Share of ``region`` pixels covered by at least one GT box."""
    hits = [hit for hit in (intersect(gt, region) for gt in gt_boxes) if hit is not None]
    return union_area(hits) / region.area


def _stats(values) -> dict:
    if not values:
        return {"mean": None, "std": None, "count": 0}
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std()), "count": int(arr.size)}


def overlap_report(
    manifest: DatasetManifest,
    strategy: Strategy,
    cfg: CropConfig,
    n_samples: int,
    seed: int,
    source: Optional[ProposalSource] = None,
    s_min: Optional[float] = None,
) -> dict:
    """Sample ``n_samples`` pair plans and summarise view IoU and object-pixel fraction.

    Empty view intersections count as 0 overlap and are left out of the
    object-pixel fraction. Box strategies fall back to ground-truth boxes
    when no source is given; the report's ``source`` names the one used.
    """
    strategy = Strategy.parse(strategy)
    if strategy.uses_gt or source is None:
        source = GroundTruthSource()
    source_kind = getattr(source, "kind", type(source).__name__)
    s_min = cfg.scale_lo if s_min is None else s_min
    records = manifest.records
    root = Rng(seed)
    overlaps = []
    fractions = []
    empty = 0
    for i in range(n_samples if records else 0):
        rng = root.derive(f"overlap:{i}")
        rec = records[rng.integers(0, len(records))]
        image = manifest.load_image(rec) if source_kind == "bing" else None
        boxes = source.boxes(rec, image) if strategy.needs_boxes else None
        plan = plan_pair(rec.width, rec.height, boxes, strategy, cfg, s_min, rng)
        overlaps.append(iou(plan.src_a, plan.src_b))
        inter = intersect(plan.src_a, plan.src_b)
        if inter is None:
            empty += 1
            continue
        fractions.append(object_fraction(inter, rec.boxes))
    report = {
        "strategy": strategy.value,
        "n_samples": len(overlaps),
        "seed": seed,
        "s_min": s_min,
        "source": source_kind if strategy.needs_boxes else None,
        "view_overlap": _stats(overlaps),
        "object_pixel_fraction": _stats(fractions),
        "empty_intersections": empty,
    }
    logger.info(
        "%s: overlap %.3f object fraction %s",
        strategy.value,
        report["view_overlap"]["mean"] or 0.0,
        report["object_pixel_fraction"]["mean"],
    )
    return report
