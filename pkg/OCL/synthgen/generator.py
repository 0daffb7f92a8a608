"""Seeded multi-object scene generator and the train/val splitter.

Every image draws from its own child stream ``Rng(seed).derive("image:<i>")``,
so output bytes do not depend on the worker count or completion order.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from OCL.errors import ConfigError
from OCL.imgcore import BBox, ImageRGB, Rng, intersect, resize_array, round_to_u8, save_ppm
from OCL.runs import atomic_write_text, canonical_json, default_workers
from OCL.synthgen.manifest import DatasetManifest, GtObject, ImageRecord
from OCL.synthgen.shapes import MAX_CLASSES, class_style, coverage, tight_extent

logger = logging.getLogger(__name__)

PLACEMENT_ATTEMPTS = 100
CLASS_DRAW_ATTEMPTS = 100
MIN_OBJECT_SIDE = 3


@dataclass
class SynthConfig:
    n_images: int = 200
    img_side: int = 128
    objects_min: int = 2
    objects_max: int = 12
    n_classes: int = 32
    obj_scale_lo: float = 0.05
    obj_scale_hi: float = 0.20
    longtail_exponent: float = 0.0
    min_distinct_classes: int = 2
    allow_overlap: bool = False
    bg_cell: int = 16
    bg_octaves: int = 2
    bg_contrast: float = 60.0
    train_frac: float = 0.8
    workers: Optional[int] = None
    seed: int = 0

    def validate(self) -> "SynthConfig":
        if self.n_images < 0:
            raise ConfigError(f"synth.n_images must be >= 0, got {self.n_images}")
        if self.img_side < 8:
            raise ConfigError(f"synth.img_side must be >= 8, got {self.img_side}")
        if not 1 <= self.objects_min <= self.objects_max:
            raise ConfigError(f"synth object range [{self.objects_min}, {self.objects_max}] is empty")
        if not 1 <= self.n_classes <= MAX_CLASSES:
            raise ConfigError(f"synth.n_classes must lie in [1, {MAX_CLASSES}], got {self.n_classes}")
        if self.min_distinct_classes > min(self.n_classes, self.objects_max):
            raise ConfigError(
                f"synth.min_distinct_classes={self.min_distinct_classes} cannot be met with "
                f"{self.n_classes} classes and at most {self.objects_max} objects"
            )
        if not 0 < self.obj_scale_lo <= self.obj_scale_hi <= 1:
            raise ConfigError(f"synth object scale range [{self.obj_scale_lo}, {self.obj_scale_hi}] is invalid")
        if self.longtail_exponent < 0:
            raise ConfigError("synth.longtail_exponent must be >= 0")
        if self.bg_cell < 1 or self.bg_octaves < 1:
            raise ConfigError("synth.bg_cell and synth.bg_octaves must be >= 1")
        if not 0 < self.train_frac < 1:
            raise ConfigError(f"synth.train_frac must lie in (0, 1), got {self.train_frac}")
        return self


@dataclass(frozen=True)
class PlacedObject:
    class_id: int
    x: int
    y: int
    side: int
    box: BBox


@dataclass
class ImagePlan:
    index: int
    objects: List[PlacedObject] = field(default_factory=list)
    requested: int = 0

    @property
    def dropped(self) -> int:
        return self.requested - len(self.objects)


def class_probabilities(n_classes: int, exponent: float) -> np.ndarray:
    """p(rank r) proportional to r^-exponent, r = 1..n_classes (class id = rank - 1)."""
    ranks = np.arange(1, n_classes + 1, dtype=np.float64)
    weights = ranks ** (-exponent)
    return weights / weights.sum()


def _draw_classes(k: int, cdf: np.ndarray, cfg: SynthConfig, rng: Rng) -> List[int]:
    need = min(cfg.min_distinct_classes, k)
    classes: List[int] = []
    for _ in range(CLASS_DRAW_ATTEMPTS):
        u = rng.random(k)
        classes = [int(c) for c in np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)]
        if len(set(classes)) >= need:
            return classes
    return classes


def _fits(candidate: Tuple[float, float, int, BBox], placed: List[PlacedObject], allow_overlap: bool) -> bool:
    cx, cy, side, box = candidate
    for other in placed:
        ox = other.x + other.side / 2.0
        oy = other.y + other.side / 2.0
        min_dist = 0.5 * min(side, other.side)
        if (cx - ox) ** 2 + (cy - oy) ** 2 < min_dist * min_dist:
            return False
        if not allow_overlap and intersect(box, other.box) is not None:
            return False
    return True


def plan_image(cfg: SynthConfig, index: int, rng: Rng) -> ImagePlan:
    """Layout only (classes, sizes, positions, GT boxes); no pixels."""
    side_px = cfg.img_side
    cdf = np.cumsum(class_probabilities(cfg.n_classes, cfg.longtail_exponent))
    k = rng.integers(cfg.objects_min, cfg.objects_max + 1)
    classes = _draw_classes(k, cdf, cfg, rng)
    plan = ImagePlan(index=index, requested=k)
    for class_id in classes:
        side = max(MIN_OBJECT_SIDE, int(np.floor(rng.uniform(cfg.obj_scale_lo, cfg.obj_scale_hi) * side_px + 0.5)))
        side = min(side, side_px)
        shape, _ = class_style(class_id)
        ex, ey, ew, eh = tight_extent(shape, side)
        for _ in range(PLACEMENT_ATTEMPTS):
            x = rng.integers(0, side_px - side + 1)
            y = rng.integers(0, side_px - side + 1)
            box = BBox(x + ex, y + ey, ew, eh)
            if _fits((x + side / 2.0, y + side / 2.0, side, box), plan.objects, cfg.allow_overlap):
                plan.objects.append(PlacedObject(class_id=class_id, x=x, y=y, side=side, box=box))
                break
    return plan


def value_noise_background(cfg: SynthConfig, rng: Rng) -> np.ndarray:
    """Octaves of bilinearly upsampled lattice noise around mid-grey, float64 (h, w, 3)."""
    side = cfg.img_side
    acc = np.zeros((side, side, 3))
    amplitude = 1.0
    total = 0.0
    cell = cfg.bg_cell
    for _ in range(cfg.bg_octaves):
        lattice_n = max(2, side // max(cell, 1) + 1)
        lattice = np.asarray(rng.random((lattice_n, lattice_n, 3)), dtype=np.float64)
        acc += amplitude * resize_array(lattice, side, side)
        total += amplitude
        amplitude *= 0.5
        cell = max(1, cell // 2)
    return 128.0 + cfg.bg_contrast * (acc / total - 0.5) * 2.0


def render_plan(cfg: SynthConfig, plan: ImagePlan, rng: Rng) -> ImageRGB:
    canvas = value_noise_background(cfg, rng)
    for obj in plan.objects:
        shape, color = class_style(obj.class_id)
        alpha = coverage(shape, obj.side)[..., None]
        region = canvas[obj.y : obj.y + obj.side, obj.x : obj.x + obj.side]
        region[...] = region * (1.0 - alpha) + np.asarray(color, dtype=np.float64) * alpha
    return ImageRGB(round_to_u8(canvas))


def image_name(index: int) -> str:
    return f"images/{index:06d}.ppm"


def _build_one(cfg: SynthConfig, index: int, out: Path) -> Tuple[ImageRecord, ImagePlan]:
    rng = Rng(cfg.seed).derive(f"image:{index}")
    plan = plan_image(cfg, index, rng)
    save_ppm(out / image_name(index), render_plan(cfg, plan, rng))
    objects = tuple(GtObject(class_id=o.class_id, box=o.box) for o in plan.objects)
    rec = ImageRecord(image=image_name(index), width=cfg.img_side, height=cfg.img_side, objects=objects)
    return rec, plan


def split(manifest: DatasetManifest, train_frac: float, seed: int) -> Tuple[DatasetManifest, DatasetManifest]:
    """Deterministic shuffled split; train gets floor(train_frac * n) records, order preserved."""
    if not 0 < train_frac < 1:
        raise ConfigError(f"train_frac must lie in (0, 1), got {train_frac}")
    n = len(manifest.records)
    order = Rng(seed).derive("split").permutation(n)
    n_train = int(np.floor(train_frac * n + 1e-9))
    if n >= 2:
        n_train = min(max(n_train, 1), n - 1)
    train_idx = sorted(int(i) for i in order[:n_train])
    val_idx = sorted(int(i) for i in order[n_train:])
    return (
        manifest.subset([manifest.records[i] for i in train_idx]),
        manifest.subset([manifest.records[i] for i in val_idx]),
    )


@dataclass
class GenerationResult:
    manifest: DatasetManifest
    report: Dict
    manifest_path: Path
    train_path: Path
    val_path: Path


def generate(cfg: SynthConfig, out_dir: Union[str, Path]) -> GenerationResult:
    """Write images/, manifest.jsonl, train.jsonl, val.jsonl and report.json under out_dir."""
    cfg.validate()
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    workers = cfg.workers or default_workers()
    logger.info("generating %d images with %d worker(s)", cfg.n_images, workers)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        built = list(executor.map(lambda i: _build_one(cfg, i, out), range(cfg.n_images)))

    records = [rec for rec, _ in built]
    manifest = DatasetManifest(root=out, records=records).validate(n_classes=cfg.n_classes)

    hist = Counter(o.class_id for rec in records for o in rec.objects)
    dropped = {image_name(p.index): p.dropped for _, p in built if p.dropped}
    short = [rec.image for rec in records if len(rec.classes) < cfg.min_distinct_classes]
    if dropped:
        logger.warning("placement dropped %d object(s) across %d image(s)", sum(dropped.values()), len(dropped))
    report = {
        "config": asdict(cfg),
        "images": len(records),
        "objects": sum(len(r.objects) for r in records),
        "class_histogram": {str(c): hist.get(c, 0) for c in range(cfg.n_classes)},
        "dropped_objects": dropped,
        "below_min_distinct_classes": short,
    }
    report["config"].pop("workers", None)

    train, val = split(manifest, cfg.train_frac, cfg.seed)
    manifest_path = manifest.write(out / "manifest.jsonl")
    train_path = train.write(out / "train.jsonl")
    val_path = val.write(out / "val.jsonl")
    atomic_write_text(out / "report.json", canonical_json(report))
    return GenerationResult(manifest, report, manifest_path, train_path, val_path)
