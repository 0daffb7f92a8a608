"""Recall@k of proposal sets against ground truth, and the random-box baseline."""

from __future__ import annotations

import math
from typing import Dict, List, Mapping, Sequence

from OCL.imgcore import BBox, Rng, iou
from OCL.objectness.proposer import Proposal
from OCL.synthgen.manifest import DatasetManifest, ImageRecord

MIN_RANDOM_SIDE = 8


def _as_box(item) -> BBox:
    return item.box if isinstance(item, Proposal) else item


def proposal_recall(
    manifest: DatasetManifest,
    proposals: Mapping[str, Sequence],
    k: int = 10,
    iou_thresh: float = 0.5,
) -> Dict[str, float]:
    """Fraction of GT boxes hit (IoU >= iou_thresh) by any of the first k proposals of their image."""
    n_gt = 0
    n_hit = 0
    for rec in manifest.records:
        top = [_as_box(p) for p in list(proposals.get(rec.image, []))[:k]]
        for gt in rec.boxes:
            n_gt += 1
            if any(iou(gt, box) >= iou_thresh for box in top):
                n_hit += 1
    return {
        "k": k,
        "iou": iou_thresh,
        "gt_boxes": n_gt,
        "hits": n_hit,
        "recall": (n_hit / n_gt) if n_gt else 0.0,
    }


def random_box_proposals(record: ImageRecord, n: int, rng: Rng) -> List[Proposal]:
    """n boxes with log-uniform sides in [8, image side] placed uniformly; all scored 0."""
    out: List[Proposal] = []
    lo_w = math.log(min(MIN_RANDOM_SIDE, record.width))
    lo_h = math.log(min(MIN_RANDOM_SIDE, record.height))
    for _ in range(n):
        w = max(1, int(math.exp(rng.uniform(lo_w, math.log(record.width)))))
        h = max(1, int(math.exp(rng.uniform(lo_h, math.log(record.height)))))
        x = rng.integers(0, record.width - w + 1)
        y = rng.integers(0, record.height - h + 1)
        out.append(Proposal(box=BBox(x, y, w, h), score=0.0))
    return out


def random_baseline(manifest: DatasetManifest, n: int, seed: int) -> Dict[str, List[Proposal]]:
    root = Rng(seed)
    return {rec.image: random_box_proposals(rec, n, root.derive(rec.image)) for rec in manifest.records}
