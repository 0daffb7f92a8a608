"""All-points average precision for multi-label classification."""

from __future__ import annotations

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from OCL.errors import MetricError

logger = logging.getLogger(__name__)


def average_precision(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Mean of precision@k over the ranks k of the positives.

    Ranking is by descending score; ties keep the original index order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise MetricError(f"{scores.shape[0]} scores but {labels.shape[0]} labels", code="METRIC_SHAPE")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise MetricError("average precision is undefined without positives")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    ranks = np.flatnonzero(hits) + 1
    precision_at_hits = np.arange(1, n_pos + 1) / ranks
    return float(precision_at_hits.mean())


def mean_average_precision(
    scores: np.ndarray, labels: np.ndarray, class_ids: Optional[Sequence[int]] = None
) -> Tuple[Dict[int, float], float, list]:
    """Per-class AP over columns, their mean, and the classes skipped for lacking positives."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    ids = list(range(scores.shape[1])) if class_ids is None else list(class_ids)
    per_class: Dict[int, float] = {}
    skipped = []
    for col, cid in enumerate(ids):
        try:
            per_class[cid] = average_precision(scores[:, col], labels[:, col])
        except MetricError:
            skipped.append(cid)
    if skipped:
        logger.warning("skipping %d class(es) without positives: %s", len(skipped), skipped)
    if not per_class:
        raise MetricError("no class has a positive example; mAP is undefined")
    return per_class, float(np.mean(list(per_class.values()))), skipped
