"""Training configuration and the full trainable/checkpointed model state."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from OCL.cropper import CropConfig, Strategy
from OCL.errors import ConfigError
from OCL.imgcore import Rng
from OCL.ssl.network import Architecture, Params, copy_params, init_params
from OCL.ssl.queue import NegativeQueue


@dataclass
class TrainConfig:
    temperature: float = 0.2
    momentum: float = 0.999
    queue_size: int = 4096
    lr: float = 0.03
    weight_decay: float = 1e-4
    batch_size: int = 64
    epochs: int = 200
    seed: int = 0
    strategy: Strategy = Strategy.SCENE_SCENE
    dual_heads: bool = True
    swap_views: bool = False
    cosine_lr: bool = False
    steps_per_epoch: Optional[int] = None
    hidden: int = 512
    feature_dim: int = 256
    head_hidden: int = 256
    embed_dim: int = 64
    stats_images: int = 256
    workers: Optional[int] = None
    crop: CropConfig = field(default_factory=CropConfig)

    def __post_init__(self) -> None:
        self.strategy = Strategy.parse(self.strategy)
        if isinstance(self.crop, dict):
            from OCL.config import build_section

            self.crop = build_section(CropConfig, self.crop, "train.crop")

    def architecture(self) -> Architecture:
        side = self.crop.target
        return Architecture(
            input_dim=side * side * 3,
            hidden=self.hidden,
            feature_dim=self.feature_dim,
            head_hidden=self.head_hidden,
            embed_dim=self.embed_dim,
        )

    def validate(self) -> "TrainConfig":
        if not 0 < self.momentum <= 1:
            raise ConfigError(f"train.momentum must lie in (0, 1], got {self.momentum}")
        if self.temperature <= 0:
            raise ConfigError(f"train.temperature must be > 0, got {self.temperature}")
        if self.batch_size < 1:
            raise ConfigError(f"train.batch_size must be >= 1, got {self.batch_size}")
        if self.queue_size < 0 or self.queue_size % self.batch_size:
            raise ConfigError(
                f"train.queue_size ({self.queue_size}) must be a non-negative multiple of "
                f"train.batch_size ({self.batch_size})",
                code="QUEUE_NOT_MULTIPLE",
            )
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigError("train.lr and train.weight_decay must be >= 0")
        if self.epochs < 0:
            raise ConfigError(f"train.epochs must be >= 0, got {self.epochs}")
        if self.steps_per_epoch is not None and self.steps_per_epoch < 1:
            raise ConfigError("train.steps_per_epoch must be >= 1 when set")
        for name in ("hidden", "feature_dim", "head_hidden", "embed_dim", "stats_images"):
            if getattr(self, name) < 1:
                raise ConfigError(f"train.{name} must be >= 1")
        self.crop.validate()
        return self

    def to_dict(self) -> Dict[str, Any]:
        raw = asdict(self)
        raw["strategy"] = self.strategy.value
        return raw

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "TrainConfig":
        from OCL.config import build_section

        return build_section(cls, raw, "train")


@dataclass
class MetricRow:
    epoch: int
    loss: float
    pos_sim: float
    neg_sim: float
    lr: float

    def to_list(self) -> List[Any]:
        return [self.epoch, self.loss, self.pos_sim, self.neg_sim, self.lr]


@dataclass
class ModelState:
    arch: Architecture
    params_q: Params
    params_k: Params
    input_mean: np.ndarray
    input_std: np.ndarray
    queue: NegativeQueue
    epoch: int = 0
    step: int = 0
    metrics: List[MetricRow] = field(default_factory=list)

    @classmethod
    def initial(cls, cfg: TrainConfig, input_mean=None, input_std=None) -> "ModelState":
        """Query weights from ``derive("init")``; key encoder starts as an exact copy."""
        arch = cfg.architecture()
        params_q = init_params(arch, Rng(cfg.seed).derive("init"))
        return cls(
            arch=arch,
            params_q=params_q,
            params_k=copy_params(params_q),
            input_mean=np.asarray(input_mean if input_mean is not None else np.full(3, 0.5), dtype=np.float64),
            input_std=np.asarray(input_std if input_std is not None else np.full(3, 0.25), dtype=np.float64),
            queue=NegativeQueue(cfg.queue_size, arch.embed_dim),
        )

    def standardize(self, views: np.ndarray) -> np.ndarray:
        """(B, side, side, 3) uint8 -> (B, side*side*3) standardised f64."""
        x = np.asarray(views, dtype=np.float64) / 255.0
        x = (x - self.input_mean) / self.input_std
        return x.reshape(x.shape[0], -1)
