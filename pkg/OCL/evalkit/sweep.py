"""Ablation sweeps: pretrain + probe per grid point and seed, into a resumable CSV."""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from OCL.errors import ConfigError
from OCL.evalkit.features import features_from_state
from OCL.evalkit.probe import ProbeConfig, linear_probe
from OCL.objectness.sources import ProposalSource
from OCL.runs import atomic_write_text
from OCL.ssl import TrainConfig, pretrain
from OCL.synthgen.manifest import DatasetManifest

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["param", "value", "seed", "map", "pos_sim", "neg_sim"]
SWEEP_PARAMS = ("delta", "shift", "temperature", "n_max", "scale_lo")

DELTA_GRID = [0.0, 0.1, 0.2, 0.3]
TEMPERATURE_GRID = [0.05, 0.07, 0.1, 0.2, 0.3]
PRESETS = {"delta": DELTA_GRID, "temperature": TEMPERATURE_GRID}


@dataclass
class SweepSpec:
    param: str = "delta"
    values: List[Any] = field(default_factory=lambda: list(DELTA_GRID))
    seeds: List[int] = field(default_factory=lambda: [0])
    jobs: int = 1
    preset: Optional[str] = None

    def validate(self) -> "SweepSpec":
        if self.preset is not None:
            if self.preset not in PRESETS:
                raise ConfigError(f"unknown sweep preset {self.preset!r}, expected one of {sorted(PRESETS)}")
            self.param, self.values = self.preset, list(PRESETS[self.preset])
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep.param must be one of {', '.join(SWEEP_PARAMS)}, got {self.param!r}")
        if not self.values:
            raise ConfigError("sweep.values needs at least one value")
        if not self.seeds:
            raise ConfigError("sweep.seeds needs at least one seed")
        if self.jobs < 1:
            raise ConfigError(f"sweep.jobs must be >= 1, got {self.jobs}")
        if self.param == "shift":
            for v in self.values:
                if not (isinstance(v, (list, tuple)) and len(v) == 2):
                    raise ConfigError(f"sweep over shift takes [lo, hi] pairs, got {v!r}")
        if self.param == "n_max" and any(int(v) < 1 for v in self.values):
            raise ConfigError("sweep over n_max takes values >= 1")
        return self

    def points(self) -> List[Tuple[Any, int]]:
        return [(v, s) for v in self.values for s in self.seeds]


def value_key(value: Any) -> str:
    """CSV spelling of a grid value; also the resume key."""
    if isinstance(value, (list, tuple)):
        return json.dumps([float(v) for v in value])
    if isinstance(value, bool):
        raise ConfigError(f"sweep values must be numeric, got {value!r}")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def apply_point(base: TrainConfig, param: str, value: Any, seed: int) -> TrainConfig:
    """Copy of ``base`` with one grid value and the seed applied. ``n_max`` leaves the config alone."""
    cfg = copy.deepcopy(base)
    cfg.seed = int(seed)
    if param == "delta":
        cfg.crop.delta = float(value)
    elif param == "shift":
        cfg.crop.shift_lo, cfg.crop.shift_hi = float(value[0]), float(value[1])
    elif param == "temperature":
        cfg.temperature = float(value)
    elif param == "scale_lo":
        cfg.crop.scale_lo = float(value)
    elif param != "n_max":
        raise ConfigError(f"unknown sweep parameter {param!r}")
    return cfg.validate()


@dataclass
class SweepRow:
    param: str
    value: str
    seed: int
    map: float
    pos_sim: float
    neg_sim: float

    def to_list(self) -> List[Any]:
        return [self.param, self.value, self.seed, repr(self.map), repr(self.pos_sim), repr(self.neg_sim)]


def sweep_csv(rows: List[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(row.to_list())
    return buf.getvalue()


def read_sweep_csv(path: Union[str, Path]) -> List[SweepRow]:
    p = Path(path)
    if not p.exists():
        return []
    with p.open(newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            SweepRow(
                param=r["param"],
                value=r["value"],
                seed=int(r["seed"]),
                map=float(r["map"]),
                pos_sim=float(r["pos_sim"]),
                neg_sim=float(r["neg_sim"]),
            )
            for r in reader
        ]


def run_point(
    cfg: TrainConfig,
    probe_cfg: ProbeConfig,
    train_manifest: DatasetManifest,
    val_manifest: DatasetManifest,
    n_classes: int,
    source: Optional[ProposalSource] = None,
    s_min: Optional[float] = None,
) -> Tuple[float, float, float]:
    """One pretrain + probe; returns (mAP, last-epoch pos_sim, last-epoch neg_sim)."""
    result = pretrain(train_manifest, cfg, source=source, s_min=s_min)
    state = result.state
    target = cfg.crop.target
    train_set = features_from_state(state, target, train_manifest, n_classes)
    val_set = features_from_state(state, target, val_manifest, n_classes)
    probe = linear_probe(train_set.features, train_set.labels, val_set.features, val_set.labels, probe_cfg)
    last = state.metrics[-1] if state.metrics else None
    pos = last.pos_sim if last else float("nan")
    neg = last.neg_sim if last else float("nan")
    return probe.mean_ap, pos, neg


def run_sweep(
    spec: SweepSpec,
    base: TrainConfig,
    probe_cfg: ProbeConfig,
    train_manifest: DatasetManifest,
    val_manifest: DatasetManifest,
    n_classes: int,
    out_csv: Union[str, Path],
    source_for: Optional[Callable[[Optional[int]], Optional[ProposalSource]]] = None,
    s_min: Optional[float] = None,
) -> List[SweepRow]:
    """Run every (value, seed) point not already in ``out_csv``.

    The CSV is rewritten atomically after each finished point and always
    lists rows in grid order, so an interrupted sweep resumes to the same file.
    ``source_for(n_max)`` supplies the proposal source of a point; ``n_max``
    is None unless the swept parameter is ``n_max``.
    """
    spec.validate()
    base.validate()
    order = {(value_key(v), s): i for i, (v, s) in enumerate(spec.points())}
    done: Dict[Tuple[str, int], SweepRow] = {}
    for row in read_sweep_csv(out_csv):
        if row.param == spec.param and (row.value, row.seed) in order:
            done[(row.value, row.seed)] = row
    todo = [(v, s) for v, s in spec.points() if (value_key(v), s) not in done]
    if done:
        logger.info("resuming sweep over %s: %d of %d point(s) already done", spec.param, len(done), len(order))

    def flush() -> None:
        rows = sorted(done.values(), key=lambda r: order[(r.value, r.seed)])
        atomic_write_text(out_csv, sweep_csv(rows))

    def one(point: Tuple[Any, int]) -> SweepRow:
        value, seed = point
        cfg = apply_point(base, spec.param, value, seed)
        n_max = int(value) if spec.param == "n_max" else None
        source = source_for(n_max) if source_for else None
        m_ap, pos, neg = run_point(cfg, probe_cfg, train_manifest, val_manifest, n_classes, source, s_min)
        logger.info("sweep %s=%s seed=%d: mAP %.4f", spec.param, value_key(value), seed, m_ap)
        return SweepRow(spec.param, value_key(value), int(seed), m_ap, pos, neg)

    with ThreadPoolExecutor(max_workers=spec.jobs) as executor:
        for row in executor.map(one, todo):
            done[(row.value, row.seed)] = row
            flush()
    if not todo:
        flush()
    return sorted(done.values(), key=lambda r: order[(r.value, r.seed)])
