"""Run configuration: one document with a section per module, loaded from JSON or YAML.

Unknown keys are rejected with their dotted path, ``--set section.key=value``
overrides are applied before validation, and every default is materialised
in the echoed config so a run directory alone reproduces the command.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import logging
import typing
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

try:
    import yaml
except ImportError:  # pragma: no cover - PyYAML is a declared dependency
    yaml = None

from OCL.cropper.strategies import CropConfig, Strategy
from OCL.errors import ConfigError, MissingInputError
from OCL.evalkit.probe import ProbeConfig
from OCL.evalkit.sweep import SweepSpec
from OCL.objectness.proposer import ProposalConfig
from OCL.objectness.sources import source_kinds
from OCL.objectness.trainer import BingTrainConfig
from OCL.ssl.state import TrainConfig
from OCL.synthgen.generator import SynthConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# --- generic dataclass builder ---
def _unwrap_optional(hint):
    if typing.get_origin(hint) is Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if len(args) == 1:
            return args[0], True
    return hint, False


def _coerce(hint, value: Any, path: str) -> Any:
    hint, optional = _unwrap_optional(hint)
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{path} may not be null", code="INVALID_VALUE")
    if dataclasses.is_dataclass(hint):
        return build_section(hint, value, path)
    if isinstance(hint, type) and issubclass(hint, Strategy):
        return Strategy.parse(value)
    if isinstance(hint, type) and issubclass(hint, Enum):
        try:
            return hint(value)
        except ValueError:
            raise ConfigError(f"{path}: invalid value {value!r}", code="INVALID_VALUE") from None
    origin = typing.get_origin(hint)
    if origin in (tuple, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path} must be a list, got {value!r}", code="INVALID_VALUE")
        args = typing.get_args(hint)
        inner = args[0] if args else Any
        items = [_coerce(inner, v, f"{path}[{i}]") for i, v in enumerate(value)]
        return tuple(items) if origin is tuple else items
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false, got {value!r}", code="INVALID_VALUE")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{path} must be an integer, got {value!r}", code="INVALID_VALUE")
        return int(value)
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number, got {value!r}", code="INVALID_VALUE")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string, got {value!r}", code="INVALID_VALUE")
        return value
    return value


def build_section(cls, raw: Any, path: str):
    """Build dataclass ``cls`` from a mapping; unknown keys are errors naming ``path.key``."""
    if isinstance(raw, cls):
        return raw
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must be a mapping, got {type(raw).__name__}", code="INVALID_VALUE")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(
            f"unknown key(s) {', '.join(f'{path}.{k}' for k in unknown)}",
            code="UNKNOWN_KEY",
            details={"keys": [f"{path}.{k}" for k in unknown]},
        )
    kwargs = {key: _coerce(hints[key], value, f"{path}.{key}") for key, value in raw.items()}
    return cls(**kwargs)


def section_dict(obj: Any) -> Dict[str, Any]:
    """JSON-ready dict of a dataclass section (enums by value, tuples as lists)."""

    def plain(v):
        if isinstance(v, Enum):
            return v.value
        if dataclasses.is_dataclass(v):
            return {f.name: plain(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if isinstance(v, (list, tuple)):
            return [plain(x) for x in v]
        return v

    return plain(obj)


# --- sections only the command line needs ---
@dataclass
class ProposalSection(ProposalConfig):
    source: str = "cache"
    recall_k: int = 10
    recall_iou: float = 0.5

    def validate(self) -> "ProposalSection":
        super().validate()
        if self.source not in source_kinds():
            raise ConfigError(f"proposals.source must be one of {source_kinds()}, got {self.source!r}")
        if self.recall_k < 1 or not 0 < self.recall_iou <= 1:
            raise ConfigError("proposals.recall_k must be >= 1 and proposals.recall_iou in (0, 1]")
        return self

    def proposal_config(self) -> ProposalConfig:
        return ProposalConfig(n_max=self.n_max, nms_iou=self.nms_iou, per_size_keep=self.per_size_keep)


@dataclass
class BenchConfig:
    width: int = 300
    height: int = 300
    n_iters: int = 20
    warmup: int = 2
    tolerance: float = 0.2

    def validate(self) -> "BenchConfig":
        if self.width < 1 or self.height < 1 or self.n_iters < 1 or self.warmup < 0:
            raise ConfigError("bench.width, bench.height and bench.n_iters must be >= 1, bench.warmup >= 0")
        if not 0 <= self.tolerance < 1:
            raise ConfigError(f"bench.tolerance must lie in [0, 1), got {self.tolerance}")
        return self


@dataclass
class AnalysisConfig:
    overlap_samples: int = 1000
    dump_pairs: int = 16

    def validate(self) -> "AnalysisConfig":
        if self.overlap_samples < 1 or self.dump_pairs < 1:
            raise ConfigError("analysis.overlap_samples and analysis.dump_pairs must be >= 1")
        return self


@dataclass
class PathsConfig:
    """Artifact locations; relative paths resolve against the ``--out`` directory."""

    dataset: str = "data"
    model: str = "bing.model"
    proposals: str = "proposals.jsonl"
    checkpoint: str = "checkpoint.bin"
    metrics: str = "metrics.csv"
    probe: str = "probe.json"
    probe_csv: str = "probe_ap.csv"
    recall: str = "recall.json"
    crops: str = "crops"
    overlap: str = "overlap.json"
    sweep: str = "sweep.csv"
    bench: str = "bench.json"
    baseline: Optional[str] = None


# Section seeds and train.crop come from the top-level ``seed`` and ``crop``.
_DERIVED_KEYS = {"synth": ("seed",), "bing": ("seed",), "train": ("seed", "crop")}


@dataclass
class RunConfig:
    seed: int = 0
    synth: SynthConfig = field(default_factory=SynthConfig)
    proposals: ProposalSection = field(default_factory=ProposalSection)
    bing: BingTrainConfig = field(default_factory=BingTrainConfig)
    crop: CropConfig = field(default_factory=CropConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    bench: BenchConfig = field(default_factory=BenchConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def __post_init__(self) -> None:
        self.sync()

    def sync(self) -> "RunConfig":
        self.synth.seed = self.seed
        self.bing.seed = self.seed
        self.train.seed = self.seed
        self.train.crop = self.crop
        return self

    def validate(self) -> "RunConfig":
        self.sync()
        for section in (self.synth, self.proposals, self.bing, self.crop, self.train, self.probe):
            section.validate()
        self.sweep.validate()
        self.bench.validate()
        self.analysis.validate()
        return self

    @classmethod
    def from_dict(cls, raw: Optional[Dict[str, Any]]) -> "RunConfig":
        raw = raw or {}
        if not isinstance(raw, dict):
            raise ConfigError("a run config must be a mapping at the top level")
        for section, keys in _DERIVED_KEYS.items():
            body = raw.get(section) or {}
            for key in keys:
                if isinstance(body, dict) and key in body:
                    raise ConfigError(
                        f"{section}.{key} is set from the top-level '{key}'; remove it from the {section} section",
                        code="UNKNOWN_KEY",
                    )
        return build_section(cls, raw, "config")

    def to_dict(self) -> Dict[str, Any]:
        self.sync()
        out = section_dict(self)
        for section, keys in _DERIVED_KEYS.items():
            for key in keys:
                out[section].pop(key, None)
        return out

    def resolve_path(self, out_dir: PathLike, name: str) -> Path:
        value = getattr(self.paths, name)
        if value is None:
            raise ConfigError(f"paths.{name} is not set")
        p = Path(value)
        return p if p.is_absolute() else Path(out_dir) / p

    def dataset_file(self, out_dir: PathLike, split: str = "manifest") -> Path:
        return self.resolve_path(out_dir, "dataset") / f"{split}.jsonl"


# --- loading ---
def _read_document(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise MissingInputError(f"config file not found: {path}")
    content = path.read_text(encoding="utf-8")
    if path.suffix in (".yml", ".yaml"):
        if yaml is None:
            raise ConfigError("PyYAML is missing. Install it to use .yml configs: pip install PyYAML")
        try:
            return yaml.safe_load(content) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}", code="CONFIG_PARSE") from None
    try:
        return json.loads(content)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}", code="CONFIG_PARSE") from None


def parse_override(item: str):
    """``a.b=value`` -> (["a", "b"], value); the value is JSON when it parses, else a string."""
    if "=" not in item:
        raise ConfigError(f"override '{item}' must look like section.key=value", code="BAD_OVERRIDE")
    key, text = item.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"override '{item}' has an empty key", code="BAD_OVERRIDE")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    return parts, value


def apply_overrides(raw: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    out = copy.deepcopy(raw)
    for item in overrides:
        parts, value = parse_override(item)
        node = out
        for i, part in enumerate(parts[:-1]):
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            elif not isinstance(child, dict):
                raise ConfigError(f"override '{item}': {'.'.join(parts[: i + 1])} is not a section", code="BAD_OVERRIDE")
            node = child
        node[parts[-1]] = value
    return out


def load_config(
    path: Optional[PathLike] = None, overrides: Iterable[str] = (), seed: Optional[int] = None
) -> RunConfig:
    """Config file (optional) + ``--set`` overrides + ``--seed``, validated."""
    raw: Dict[str, Any] = _read_document(Path(path)) if path else {}
    raw = apply_overrides(raw or {}, overrides)
    if seed is not None:
        raw["seed"] = seed
    cfg = RunConfig.from_dict(raw).validate()
    logger.debug("resolved config seed=%d strategy=%s", cfg.seed, cfg.train.strategy.value)
    return cfg
