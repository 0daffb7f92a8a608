"""One-vs-all logistic-regression probe on frozen features."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from OCL.errors import ConfigError, MetricError
from OCL.evalkit.metrics import mean_average_precision

logger = logging.getLogger(__name__)


@dataclass
class ProbeConfig:
    lr: float = 0.1
    epochs: int = 300
    l2: float = 1e-4
    frozen: bool = True

    def validate(self) -> "ProbeConfig":
        if not self.frozen:
            raise ConfigError("probe.frozen must be true: the backbone is never updated during probing")
        if self.lr < 0 or self.epochs < 0 or self.l2 < 0:
            raise ConfigError("probe.lr, probe.epochs and probe.l2 must be >= 0")
        return self


@dataclass
class ProbeResult:
    per_class_ap: Dict[int, float]
    mean_ap: float
    skipped: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mAP": self.mean_ap,
            "per_class_ap": {str(k): v for k, v in sorted(self.per_class_ap.items())},
            "skipped_classes": list(self.skipped),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "ap"])
        for cid, ap in sorted(self.per_class_ap.items()):
            writer.writerow([cid, repr(ap)])
        writer.writerow(["mean", repr(self.mean_ap)])
        return buf.getvalue()


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_logistic(features: np.ndarray, labels: np.ndarray, cfg: ProbeConfig):
    """Full-batch gradient descent from zero weights; returns (W, b)."""
    n, d = features.shape
    y = labels.astype(np.float64)
    w = np.zeros((d, y.shape[1]))
    b = np.zeros(y.shape[1])
    for _ in range(cfg.epochs):
        p = _sigmoid(features @ w + b)
        g = (p - y) / max(n, 1)
        w -= cfg.lr * (features.T @ g + cfg.l2 * w)
        b -= cfg.lr * g.sum(axis=0)
    return w, b


def linear_probe(
    train_features: np.ndarray,
    train_labels: np.ndarray,
    val_features: np.ndarray,
    val_labels: np.ndarray,
    cfg: ProbeConfig,
) -> ProbeResult:
    cfg.validate()
    if train_features.shape[0] != train_labels.shape[0] or val_features.shape[0] != val_labels.shape[0]:
        raise MetricError("feature and label row counts differ", code="METRIC_SHAPE")
    mean = train_features.mean(axis=0) if train_features.size else 0.0
    std = train_features.std(axis=0) if train_features.size else 1.0
    std = np.where(std > 1e-8, std, 1.0)
    w, b = fit_logistic((train_features - mean) / std, train_labels, cfg)
    scores = _sigmoid(((val_features - mean) / std) @ w + b)
    per_class, mean_ap, skipped = mean_average_precision(scores, val_labels)
    logger.info("probe mAP %.4f over %d class(es)", mean_ap, len(per_class))
    return ProbeResult(per_class_ap=per_class, mean_ap=mean_ap, skipped=skipped)
