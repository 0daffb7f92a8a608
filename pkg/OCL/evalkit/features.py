"""Frozen-backbone features for a deterministic centre view of every image."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

from OCL.errors import ManifestError
from OCL.imgcore import BBox, ImageRGB, resize_bilinear
from OCL.ssl import ModelState, encode, load_checkpoint
from OCL.synthgen.manifest import DatasetManifest


@dataclass
class FeatureSet:
    features: np.ndarray  # (N, F)
    labels: np.ndarray  # (N, C) multi-hot
    images: List[str]


def center_view(img: ImageRGB, target: int) -> ImageRGB:
    """Largest centred square, resized to target x target."""
    side = min(img.width, img.height)
    box = BBox((img.width - side) // 2, (img.height - side) // 2, side, side)
    return resize_bilinear(img.crop(box), target, target)


def multi_hot(manifest: DatasetManifest, n_classes: int) -> np.ndarray:
    labels = np.zeros((len(manifest.records), n_classes), dtype=bool)
    for row, rec in enumerate(manifest.records):
        for obj in rec.objects:
            if not 0 <= obj.class_id < n_classes:
                raise ManifestError(
                    f"{rec.image}: class id {obj.class_id} outside [0, {n_classes})", code="CLASS_OUT_OF_RANGE"
                )
            labels[row, obj.class_id] = True
    return labels


def features_from_state(
    state: ModelState, target: int, manifest: DatasetManifest, n_classes: int, batch: int = 64
) -> FeatureSet:
    labels = multi_hot(manifest, n_classes)
    chunks = []
    records = manifest.records
    for start in range(0, len(records), batch):
        views = [center_view(manifest.load_image(r), target).pixels for r in records[start : start + batch]]
        _, _, feats = encode(state.params_q, state.standardize(np.stack(views)))
        chunks.append(feats)
    dim = state.arch.feature_dim
    features = np.vstack(chunks) if chunks else np.zeros((0, dim))
    return FeatureSet(features=features, labels=labels, images=[r.image for r in records])


def extract_features(
    checkpoint: Union[str, Path], manifest: DatasetManifest, n_classes: int, batch: int = 64
) -> FeatureSet:
    state, cfg = load_checkpoint(checkpoint)
    return features_from_state(state, cfg.crop.target, manifest, n_classes, batch=batch)
