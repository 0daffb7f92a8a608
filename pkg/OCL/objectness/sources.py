"""Box sources feeding the crop samplers: cached proposals, on-the-fly BING, or ground truth."""

from __future__ import annotations

import logging
import threading
from typing import Dict, List, Optional, Protocol, Type

from OCL.errors import ConfigError
from OCL.imgcore import BBox, ImageRGB
from OCL.objectness.cache import ProposalCache
from OCL.objectness.model import BingModel
from OCL.objectness.proposer import ProposalConfig, propose
from OCL.synthgen.manifest import ImageRecord

logger = logging.getLogger(__name__)


class ProposalSource(Protocol):
    """Anything that can hand the sampler a list of candidate boxes for one image."""

    kind: str

    def boxes(self, record: ImageRecord, image: Optional[ImageRGB] = None) -> List[BBox]: ...


class CachedProposalSource:
    """Pre-generated proposals; any external method can plug in by writing the JSONL cache."""

    kind = "cache"

    def __init__(self, cache: ProposalCache, n_max: int = 10):
        self.cache = cache
        self.n_max = n_max

    def boxes(self, record: ImageRecord, image: Optional[ImageRGB] = None) -> List[BBox]:
        return [p.box for p in self.cache[record.image][: self.n_max]]


class BingProposalSource:
    """Runs the objectness model inside the data loader and memoises per image."""

    kind = "bing"

    def __init__(self, model: BingModel, cfg: Optional[ProposalConfig] = None):
        self.model = model
        self.cfg = (cfg or ProposalConfig()).validate()
        self._memo: Dict[str, List[BBox]] = {}
        self._lock = threading.Lock()

    def boxes(self, record: ImageRecord, image: Optional[ImageRGB] = None) -> List[BBox]:
        with self._lock:
            hit = self._memo.get(record.image)
        if hit is not None:
            return hit
        if image is None:
            raise ConfigError("on-the-fly proposals need the decoded image")
        result = [p.box for p in propose(image, self.model, self.cfg)]
        with self._lock:
            self._memo[record.image] = result
        return result


class GroundTruthSource:
    kind = "gt"

    def boxes(self, record: ImageRecord, image: Optional[ImageRGB] = None) -> List[BBox]:
        return record.boxes


_REGISTRY: Dict[str, Type] = {}


def register_source(kind: str, source_cls: Type) -> None:
    _REGISTRY[kind.lower()] = source_cls


def source_kinds() -> List[str]:
    return sorted(_REGISTRY)


def get_proposal_source(kind: str, **kwargs) -> ProposalSource:
    key = (kind or "").lower()
    source_cls = _REGISTRY.get(key)
    if source_cls is None:
        raise ConfigError(f"unknown proposal source '{kind}', expected one of {sorted(_REGISTRY)}")
    return source_cls(**kwargs)


register_source(CachedProposalSource.kind, CachedProposalSource)
register_source(BingProposalSource.kind, BingProposalSource)
register_source(GroundTruthSource.kind, GroundTruthSource)
