"""Sliding-window proposal generation and greedy non-maximum suppression."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from OCL.errors import ConfigError
from OCL.imgcore import BBox, ImageRGB, iou
from OCL.objectness.features import normed_gradient, window_grid
from OCL.objectness.model import BingModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Proposal:
    box: BBox
    score: float

    @property
    def is_fallback(self) -> bool:
        """Whole-image stand-in emitted when no window fits the image."""
        return math.isinf(self.score) and self.score < 0

    def to_dict(self) -> dict:
        return {"box": self.box.to_list(), "score": self.score}


@dataclass
class ProposalConfig:
    n_max: int = 10
    nms_iou: float = 0.5
    per_size_keep: int = 30

    def validate(self) -> "ProposalConfig":
        if self.n_max < 1:
            raise ConfigError(f"proposals.n_max must be >= 1, got {self.n_max}")
        if not 0.0 < self.nms_iou < 1.0:
            raise ConfigError(f"proposals.nms_iou must lie in (0, 1), got {self.nms_iou}")
        if self.per_size_keep < 1:
            raise ConfigError(f"proposals.per_size_keep must be >= 1, got {self.per_size_keep}")
        return self


def _order_key(p: Proposal):
    return (-p.score, p.box.x, p.box.y)


def nms(props: Iterable[Proposal], iou_thresh: float, limit: Optional[int] = None) -> List[Proposal]:
    """Greedy NMS in (score desc, x asc, y asc) order; survivors have pairwise IoU < iou_thresh.

    ``limit`` stops once that many survivors exist, which equals running NMS to
    completion and truncating.
    """
    ordered = sorted(props, key=_order_key)
    kept: List[Proposal] = []
    for cand in ordered:
        if limit is not None and len(kept) >= limit:
            break
        if all(iou(cand.box, k.box) < iou_thresh for k in kept):
            kept.append(cand)
    return kept


def score_candidates(img: ImageRGB, model: BingModel, per_size_keep: int) -> List[Proposal]:
    """Top calibrated windows of every quantized size that fits the image, pre-NMS."""
    ng = normed_gradient(img)
    candidates: List[Proposal] = []
    for idx, size in enumerate(model.sizes):
        grid = window_grid(ng, size)
        if grid is None:
            continue
        scores = grid.scores(model.stage1, model.bias)
        flat = scores.reshape(-1)
        keep = np.argsort(-flat, kind="stable")[:per_size_keep]
        calibrated = model.calibrate(idx, flat[keep])
        cols = scores.shape[1]
        for k, value in zip(keep, calibrated):
            row, col = divmod(int(k), cols)
            box = grid.box_of(col, row)
            if box is not None:
                candidates.append(Proposal(box=box, score=float(value)))
    return candidates


def propose(img: ImageRGB, model: BingModel, cfg: ProposalConfig) -> List[Proposal]:
    cfg.validate()
    candidates = score_candidates(img, model, cfg.per_size_keep)
    if not candidates:
        logger.warning(
            "image %dx%d is smaller than every quantized window; emitting whole-image fallback",
            img.width,
            img.height,
        )
        return [Proposal(box=BBox.full(img.width, img.height), score=float("-inf"))]
    return nms(candidates, cfg.nms_iou, limit=cfg.n_max)
