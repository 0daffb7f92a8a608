"""Crop-pair dump for visual inspection: PPM views plus a JSONL sidecar."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Union

from OCL.cropper.pairs import sample_pair
from OCL.cropper.strategies import CropConfig, Strategy
from OCL.imgcore import Rng, save_ppm
from OCL.runs import atomic_write_text

logger = logging.getLogger(__name__)


def dump_pairs(
    manifest,
    source,
    strategy: Strategy,
    cfg: CropConfig,
    s_min: float,
    n_pairs: int,
    seed: int,
    out_dir: Union[str, Path],
) -> Path:
    """Write ``NNNNNN_a.ppm`` / ``NNNNNN_b.ppm`` and ``pairs.jsonl`` for n_pairs pairs.

    Pair i uses image i modulo the manifest length.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    strategy = Strategy.parse(strategy)
    root = Rng(seed)
    lines = []
    records = manifest.records
    for i in range(n_pairs if records else 0):
        rec = records[i % len(records)]
        img = manifest.load_image(rec)
        boxes = source.boxes(rec, img) if strategy.needs_boxes else None
        pair = sample_pair(img, boxes, strategy, cfg, s_min, root.derive(f"dump:{i}:{rec.image}"))
        name_a, name_b = f"{i:06d}_a.ppm", f"{i:06d}_b.ppm"
        save_ppm(out / name_a, pair.view_a)
        save_ppm(out / name_b, pair.view_b)
        entry = {"index": i, "image": rec.image, "view_a": name_a, "view_b": name_b}
        entry.update(pair.plan.to_dict())
        lines.append(json.dumps(entry, sort_keys=True))
    sidecar = atomic_write_text(out / "pairs.jsonl", "".join(line + "\n" for line in lines))
    logger.info("dumped %d crop pairs to %s", len(lines), out)
    return sidecar
