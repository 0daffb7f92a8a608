"""Momentum-contrast pretraining loop.

Randomness is keyed, not sequential: epoch ``e`` shuffles with
``derive("epoch:<e>")`` and sample ``t`` of step ``j`` crops with
``derive("pair:<e>:<j>:<t>")``. A run resumed from an epoch-boundary
checkpoint therefore replays the uninterrupted run bit for bit.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from OCL.cropper import sample_pair
from OCL.errors import TrainingError
from OCL.imgcore import Rng
from OCL.objectness.sources import GroundTruthSource, ProposalSource
from OCL.runs import atomic_write_text, default_workers
from OCL.ssl.checkpoint import save_checkpoint
from OCL.ssl.loss import info_nce_batch
from OCL.ssl.network import backward, forward, momentum_update, route_heads
from OCL.ssl.state import MetricRow, ModelState, TrainConfig
from OCL.synthgen.manifest import DatasetManifest

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("epoch", "loss", "pos_sim", "neg_sim", "lr")
MIN_STD = 1e-6


def dataset_statistics(manifest: DatasetManifest, limit: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-channel mean/std of pixel values in [0, 1] over the first ``limit`` images."""
    total = np.zeros(3)
    total_sq = np.zeros(3)
    count = 0
    for rec in manifest.records[:limit]:
        px = manifest.load_image(rec).pixels.reshape(-1, 3).astype(np.float64) / 255.0
        total += px.sum(axis=0)
        total_sq += (px * px).sum(axis=0)
        count += px.shape[0]
    if count == 0:
        return np.full(3, 0.5), np.full(3, 0.25)
    mean = total / count
    std = np.sqrt(np.maximum(total_sq / count - mean * mean, 0.0))
    return mean, np.maximum(std, MIN_STD)


def steps_in_epoch(n_images: int, cfg: TrainConfig) -> int:
    if cfg.steps_per_epoch is not None:
        return cfg.steps_per_epoch
    return max(1, math.ceil(n_images / cfg.batch_size))


def learning_rate(cfg: TrainConfig, step: int, total_steps: int) -> float:
    if not cfg.cosine_lr or total_steps <= 0:
        return cfg.lr
    return cfg.lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def metrics_csv(rows: Sequence[MetricRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for row in rows:
        writer.writerow([row.epoch] + [repr(float(v)) for v in row.to_list()[1:]])
    return buf.getvalue()


@dataclass
class PretrainResult:
    state: ModelState
    cfg: TrainConfig
    checkpoint_path: Optional[Path] = None
    metrics_path: Optional[Path] = None


class Pretrainer:
    def __init__(
        self,
        manifest: DatasetManifest,
        cfg: TrainConfig,
        source: Optional[ProposalSource] = None,
        s_min: Optional[float] = None,
    ):
        self.cfg = cfg.validate()
        if not manifest.records:
            raise TrainingError("pretraining needs a non-empty dataset", code="EMPTY_DATASET")
        if cfg.strategy.uses_gt:
            source = GroundTruthSource()
        if cfg.strategy.needs_boxes and source is None:
            raise TrainingError(
                f"strategy {cfg.strategy.value} needs a proposal source (cache, bing or gt)", code="NO_BOX_SOURCE"
            )
        self.manifest = manifest
        self.source = source
        self.s_min = cfg.crop.scale_lo if s_min is None else s_min
        self.workers = cfg.workers or default_workers()
        self.root = Rng(cfg.seed)

    # --- batches ---
    def _pair(self, epoch: int, step: int, slot: int, index: int):
        rec = self.manifest.records[index]
        img = self.manifest.load_image(rec)
        boxes = self.source.boxes(rec, img) if self.cfg.strategy.needs_boxes else None
        rng = self.root.derive(f"pair:{epoch}:{step}:{slot}")
        return sample_pair(img, boxes, self.cfg.strategy, self.cfg.crop, self.s_min, rng)

    def batch(self, epoch: int, step: int, order: np.ndarray, executor: ThreadPoolExecutor):
        n = len(order)
        bsz = self.cfg.batch_size
        jobs = [(slot, int(order[(step * bsz + slot) % n])) for slot in range(bsz)]
        return list(executor.map(lambda job: self._pair(epoch, step, job[0], job[1]), jobs))

    # --- optimisation ---
    def train_step(self, state: ModelState, pairs, lr: float) -> Tuple[float, np.ndarray, float, int]:
        cfg = self.cfg
        roles_a = [p.role_a.value for p in pairs]
        roles_b = [p.role_b.value for p in pairs]
        heads_a, heads_b = route_heads(roles_a, roles_b, cfg.dual_heads)
        x_a = state.standardize(np.stack([p.view_a.pixels for p in pairs]))
        x_b = state.standardize(np.stack([p.view_b.pixels for p in pairs]))
        if cfg.swap_views:
            x_a, x_b, heads_a, heads_b = x_b, x_a, heads_b, heads_a

        _, q, tape = forward(state.params_q, x_a, heads_a)
        _, k, _ = forward(state.params_k, x_b, heads_b)
        out = info_nce_batch(q, k, state.queue.negatives(), cfg.temperature)
        grads = backward(state.params_q, tape, out.grad_q)
        if lr > 0:
            for name, param in state.params_q.items():
                param -= lr * (grads[name] + cfg.weight_decay * param)
        momentum_update(state.params_k, state.params_q, cfg.momentum)
        tags = np.arange(state.step * cfg.batch_size, (state.step + 1) * cfg.batch_size)
        state.queue.enqueue(k, tags)
        state.step += 1
        return out.loss, out.pos_sim, out.neg_sim_sum, out.neg_count

    def run_epoch(self, state: ModelState, executor: ThreadPoolExecutor, total_steps: int) -> MetricRow:
        epoch = state.epoch
        n = len(self.manifest.records)
        order = self.root.derive(f"epoch:{epoch}").permutation(n)
        steps = steps_in_epoch(n, self.cfg)
        losses: List[float] = []
        pos_total = 0.0
        pos_count = 0
        neg_total = 0.0
        neg_count = 0
        lr = self.cfg.lr
        for j in range(steps):
            lr = learning_rate(self.cfg, state.step, total_steps)
            pairs = self.batch(epoch, j, order, executor)
            loss, pos, neg_sum, n_neg = self.train_step(state, pairs, lr)
            losses.append(loss)
            pos_total += float(pos.sum())
            pos_count += pos.size
            neg_total += neg_sum
            neg_count += n_neg
        state.epoch += 1
        row = MetricRow(
            epoch=state.epoch,
            loss=float(np.mean(losses)),
            pos_sim=pos_total / pos_count,
            neg_sim=(neg_total / neg_count) if neg_count else float("nan"),
            lr=lr,
        )
        state.metrics.append(row)
        return row

    def run(
        self,
        state: Optional[ModelState] = None,
        checkpoint_path: Optional[Union[str, Path]] = None,
        metrics_path: Optional[Union[str, Path]] = None,
        stop_after: Optional[int] = None,
    ) -> PretrainResult:
        """Train up to ``cfg.epochs`` (or ``stop_after`` more epochs), checkpointing every epoch."""
        cfg = self.cfg
        if state is None:
            mean, std = dataset_statistics(self.manifest, cfg.stats_images)
            state = ModelState.initial(cfg, mean, std)
        total_steps = cfg.epochs * steps_in_epoch(len(self.manifest.records), cfg)
        last = cfg.epochs if stop_after is None else min(cfg.epochs, state.epoch + stop_after)
        ckpt = Path(checkpoint_path) if checkpoint_path else None
        mpath = Path(metrics_path) if metrics_path else None
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            while state.epoch < last:
                row = self.run_epoch(state, executor, total_steps)
                logger.info(
                    "epoch %d loss=%.5f pos=%.4f neg=%.4f lr=%g", row.epoch, row.loss, row.pos_sim, row.neg_sim, row.lr
                )
                if ckpt:
                    save_checkpoint(ckpt, state, cfg)
                if mpath:
                    atomic_write_text(mpath, metrics_csv(state.metrics))
        if ckpt and not ckpt.exists():
            save_checkpoint(ckpt, state, cfg)
        if mpath and not mpath.exists():
            atomic_write_text(mpath, metrics_csv(state.metrics))
        return PretrainResult(state=state, cfg=cfg, checkpoint_path=ckpt, metrics_path=mpath)


def pretrain(
    manifest: DatasetManifest,
    cfg: TrainConfig,
    source: Optional[ProposalSource] = None,
    s_min: Optional[float] = None,
    *,
    state: Optional[ModelState] = None,
    checkpoint_path: Optional[Union[str, Path]] = None,
    metrics_path: Optional[Union[str, Path]] = None,
    stop_after: Optional[int] = None,
) -> PretrainResult:
    trainer = Pretrainer(manifest, cfg, source=source, s_min=s_min)
    return trainer.run(state, checkpoint_path=checkpoint_path, metrics_path=metrics_path, stop_after=stop_after)
