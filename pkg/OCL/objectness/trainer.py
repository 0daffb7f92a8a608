"""Training the two-stage objectness model from ground-truth boxes.

Stage 1 is a linear template on 8x8 NG windows fitted with hinge loss + L2 by
plain SGD. Stage 2 fits one affine map (v, t) per quantized size, regressing
stage-1 scores of that size's top windows onto +1 (IoU >= 0.5 with a GT box)
or -1.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from OCL.errors import ConfigError, TrainingError
from OCL.imgcore import BBox, Rng, iou
from OCL.objectness.features import TEMPLATE, WindowGrid, normed_gradient, window_grid
from OCL.objectness.model import DEFAULT_SIDES, MAX_ASPECT, BingModel, identity_calibration, quantize_size, quantized_sizes
from OCL.synthgen.manifest import DatasetManifest

logger = logging.getLogger(__name__)


@dataclass
class BingTrainConfig:
    sides: Tuple[int, ...] = DEFAULT_SIDES
    max_aspect: float = MAX_ASPECT
    l2: float = 1e-4
    epochs: int = 20
    lr: float = 0.01
    negatives_per_image: int = 20
    negative_iou: float = 0.3
    positive_iou: float = 0.5
    calibration_keep: int = 30
    seed: int = 0

    def validate(self) -> "BingTrainConfig":
        if not self.sides or any(s < TEMPLATE for s in self.sides):
            raise ConfigError(f"bing.sides must be non-empty and >= {TEMPLATE}, got {list(self.sides)}")
        if self.max_aspect < 1:
            raise ConfigError("bing.max_aspect must be >= 1")
        if self.epochs < 0 or self.lr < 0 or self.l2 < 0:
            raise ConfigError("bing.epochs, bing.lr and bing.l2 must be non-negative")
        if not 0 < self.negative_iou < 1 or not 0 < self.positive_iou <= 1:
            raise ConfigError("bing IoU thresholds must lie in (0, 1]")
        return self


class _ImageGrids:
    """Lazily built window grids for one image."""

    def __init__(self, ng, sizes: Sequence[Tuple[int, int]]):
        self.ng = ng
        self.sizes = list(sizes)
        self._grids: Dict[Tuple[int, int], object] = {}

    def get(self, size: Tuple[int, int]):
        if size not in self._grids:
            self._grids[size] = window_grid(self.ng, size)
        return self._grids[size]


def fit_stage1(
    features: np.ndarray, labels: np.ndarray, *, epochs: int, lr: float, l2: float, rng: Rng
) -> Tuple[np.ndarray, float, float]:
    """Hinge-loss SGD; returns (weights, bias, final mean hinge loss on the training set)."""
    n, dim = features.shape
    w = np.zeros(dim)
    b = 0.0
    decay = 1.0 - lr * l2
    for _ in range(epochs):
        for i in rng.permutation(n):
            x = features[i]
            y = labels[i]
            margin = y * (float(x @ w) + b)
            w *= decay
            if margin < 1.0:
                w += (lr * y) * x
                b += lr * y
    margins = labels * (features @ w + b)
    loss = float(np.mean(np.maximum(0.0, 1.0 - margins))) if n else 0.0
    return w, b, loss


def fit_affine(scores: np.ndarray, targets: np.ndarray) -> Tuple[float, float]:
    """Least-squares (v, t) with v * score + t ~ target."""
    mean_s = float(np.mean(scores))
    mean_y = float(np.mean(targets))
    var_s = float(np.mean((scores - mean_s) ** 2))
    if var_s <= 0.0:
        raise ValueError("scores have zero variance")
    v = float(np.mean((scores - mean_s) * (targets - mean_y))) / var_s
    return v, mean_y - v * mean_s


def _negative_windows(
    grids: _ImageGrids, gt: Sequence[BBox], count: int, thresh: float, rng: Rng
) -> List[Tuple[np.ndarray, BBox]]:
    usable = [s for s in grids.sizes if grids.get(s) is not None]
    out: List[Tuple[np.ndarray, BBox]] = []
    if not usable:
        return out
    attempts = 0
    while len(out) < count and attempts < 10 * count:
        attempts += 1
        grid: WindowGrid = grids.get(usable[rng.integers(0, len(usable))])
        cols, rows = grid.positions
        col, row = rng.integers(0, cols), rng.integers(0, rows)
        box = grid.box_of(col, row)
        if box is None or any(iou(box, g) >= thresh for g in gt):
            continue
        out.append((grid.window(col, row), box))
    return out


def train(dataset: DatasetManifest, cfg: BingTrainConfig) -> BingModel:
    cfg.validate()
    if not any(rec.objects for rec in dataset.records):
        raise TrainingError("objectness training needs at least one ground-truth box", code="EMPTY_DATASET")
    sizes = quantized_sizes(cfg.sides, cfg.max_aspect)
    rng = Rng(cfg.seed)

    feats: List[np.ndarray] = []
    labels: List[float] = []
    per_image: List[Tuple[_ImageGrids, List[BBox]]] = []
    for rec in dataset.records:
        if not rec.objects:
            continue
        grids = _ImageGrids(normed_gradient(dataset.load_image(rec)), sizes)
        gt = rec.boxes
        per_image.append((grids, gt))
        for box in gt:
            grid = grids.get(quantize_size(box.w, box.h, sizes))
            if grid is None:
                continue
            col, row = grid.locate(box)
            feats.append(grid.window(col, row))
            labels.append(1.0)
        img_rng = rng.derive(rec.image)
        for window, _ in _negative_windows(grids, gt, cfg.negatives_per_image, cfg.negative_iou, img_rng):
            feats.append(window)
            labels.append(-1.0)

    if not any(lab > 0 for lab in labels):
        raise TrainingError("no ground-truth box fits any quantized window size", code="NO_POSITIVES")
    X = np.stack(feats)
    y = np.asarray(labels)
    logger.info("stage 1: %d samples (%d positive)", len(y), int((y > 0).sum()))
    weights, bias, hinge = fit_stage1(X, y, epochs=cfg.epochs, lr=cfg.lr, l2=cfg.l2, rng=rng.derive("stage1"))

    # stage 2: calibrate each size on its own top-scoring windows
    calibration = identity_calibration(len(sizes))
    for idx, size in enumerate(sizes):
        scores: List[float] = []
        targets: List[float] = []
        for grids, gt in per_image:
            grid = grids.get(size)
            if grid is None:
                continue
            smap = grid.scores(weights, bias)
            flat = smap.reshape(-1)
            for k in np.argsort(-flat, kind="stable")[: cfg.calibration_keep]:
                row, col = divmod(int(k), smap.shape[1])
                box = grid.box_of(col, row)
                if box is None:
                    continue
                hit = any(iou(box, g) >= cfg.positive_iou for g in gt)
                scores.append(float(flat[k]))
                targets.append(1.0 if hit else -1.0)
        if not scores:
            logger.warning("quantized size %dx%d has no samples; using identity calibration", *size)
            continue
        try:
            calibration[idx] = fit_affine(np.asarray(scores), np.asarray(targets))
        except ValueError:
            logger.warning("quantized size %dx%d has degenerate scores; using identity calibration", *size)

    recipe = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()}
    recipe.update({"samples": int(len(y)), "positives": int((y > 0).sum()), "final_hinge_loss": round(hinge, 9)})
    return BingModel(stage1=weights, bias=bias, sizes=sizes, calibration=calibration, recipe=recipe)
