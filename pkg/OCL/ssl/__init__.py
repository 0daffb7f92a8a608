"""Desk-scale momentum-contrast pretraining with object/context projection heads."""

from OCL.ssl.checkpoint import checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint
from OCL.ssl.loss import BatchLoss, info_nce, info_nce_batch
from OCL.ssl.network import (
    HEAD_CTX,
    HEAD_OBJ,
    Architecture,
    backward,
    copy_params,
    encode,
    forward,
    init_params,
    momentum_update,
    route_heads,
)
from OCL.ssl.queue import NegativeQueue
from OCL.ssl.state import MetricRow, ModelState, TrainConfig
from OCL.ssl.trainer import PretrainResult, Pretrainer, dataset_statistics, metrics_csv, pretrain

__all__ = [
    "Architecture",
    "BatchLoss",
    "HEAD_CTX",
    "HEAD_OBJ",
    "MetricRow",
    "ModelState",
    "NegativeQueue",
    "PretrainResult",
    "Pretrainer",
    "TrainConfig",
    "backward",
    "checkpoint_from_bytes",
    "checkpoint_to_bytes",
    "copy_params",
    "dataset_statistics",
    "encode",
    "forward",
    "info_nce",
    "info_nce_batch",
    "init_params",
    "load_checkpoint",
    "metrics_csv",
    "momentum_update",
    "pretrain",
    "route_heads",
    "save_checkpoint",
]
