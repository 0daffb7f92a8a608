"""Proposal throughput benchmark and its regression gate."""

from __future__ import annotations

import logging
import time
from typing import Callable, Optional

import numpy as np

from OCL.errors import ConfigError
from OCL.imgcore import ImageRGB, Rng
from OCL.objectness.model import BingModel
from OCL.objectness.proposer import ProposalConfig, propose

logger = logging.getLogger(__name__)


def synthetic_image(width: int, height: int, seed: int) -> ImageRGB:
    rng = Rng(seed)
    return ImageRGB(np.asarray(rng.integers(0, 256, (height, width, 3)), dtype=np.uint8))


def bench_proposals(
    model: BingModel,
    width: int = 300,
    height: int = 300,
    n_iters: int = 20,
    warmup: int = 2,
    seed: int = 0,
    cfg: Optional[ProposalConfig] = None,
    clock: Callable[[], float] = time.perf_counter,
) -> dict:
    """Single-thread proposals/sec on synthetic images after ``warmup`` untimed runs."""
    if n_iters < 1:
        raise ConfigError(f"bench.n_iters must be >= 1, got {n_iters}")
    cfg = cfg or ProposalConfig()
    images = [synthetic_image(width, height, seed + i) for i in range(min(n_iters, 4))]
    for i in range(warmup):
        propose(images[i % len(images)], model, cfg)
    seconds = []
    for i in range(n_iters):
        start = clock()
        propose(images[i % len(images)], model, cfg)
        seconds.append(max(clock() - start, 1e-12))
    lat = np.asarray(seconds)
    report = {
        "width": width,
        "height": height,
        "n_iters": n_iters,
        "warmup": warmup,
        "fps_mean": float(n_iters / lat.sum()),
        "fps_p50": float(1.0 / np.percentile(lat, 50)),
        "fps_p95": float(1.0 / np.percentile(lat, 95)),
        "latency_ms": {
            "mean": float(lat.mean() * 1e3),
            "p50": float(np.percentile(lat, 50) * 1e3),
            "p95": float(np.percentile(lat, 95) * 1e3),
        },
        "samples": len(seconds),
    }
    logger.info("proposals: %.1f fps mean on %dx%d", report["fps_mean"], width, height)
    return report


def check_regression(report: dict, baseline: dict, tolerance: float = 0.2) -> dict:
    """Pass when mean fps is at least (1 - tolerance) of the baseline's."""
    if not 0 <= tolerance < 1:
        raise ConfigError(f"regression tolerance must lie in [0, 1), got {tolerance}")
    fps = float(report["fps_mean"])
    base = float(baseline["fps_mean"])
    floor = (1.0 - tolerance) * base
    return {"ok": fps >= floor, "fps_mean": fps, "baseline_fps_mean": base, "floor": floor, "ratio": fps / base}
