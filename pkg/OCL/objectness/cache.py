"""JSONL proposal cache, one object per image keyed by its manifest-relative path.

    {"image": "images/000000.ppm", "proposals": [{"box": [x, y, w, h], "score": 0.42}, ...]}

Fallback proposals keep their ``-Infinity`` score (Python's json accepts it).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Union

from OCL.errors import GeometryError, MissingInputError, ProposalCacheError
from OCL.imgcore import BBox
from OCL.objectness.proposer import Proposal

logger = logging.getLogger(__name__)


class ProposalCache:
    def __init__(self, entries: Mapping[str, List[Proposal]] = None):
        self.entries: Dict[str, List[Proposal]] = {k: list(v) for k, v in (entries or {}).items()}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __getitem__(self, key: str) -> List[Proposal]:
        try:
            return self.entries[key]
        except KeyError:
            raise ProposalCacheError(f"image not in proposal cache: {key}", code="CACHE_MISSING_KEYS") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProposalCache):
            return NotImplemented
        return self.entries == other.entries

    def put(self, key: str, proposals: Iterable[Proposal]) -> None:
        self.entries[key] = list(proposals)

    def keys(self) -> List[str]:
        return list(self.entries)

    def require(self, keys: Iterable[str]) -> "ProposalCache":
        missing = sorted(k for k in keys if k not in self.entries)
        if missing:
            shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
            raise ProposalCacheError(
                f"{len(missing)} image(s) missing from proposal cache: {shown}",
                code="CACHE_MISSING_KEYS",
                details={"missing": missing},
            )
        return self

    def to_jsonl(self) -> str:
        lines = []
        for key, props in self.entries.items():
            lines.append(json.dumps({"image": key, "proposals": [p.to_dict() for p in props]}))
        return "".join(line + "\n" for line in lines)

    def write(self, path: Union[str, Path]) -> Path:
        from OCL.runs import atomic_write_text

        return atomic_write_text(path, self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str, source: str = "<cache>") -> "ProposalCache":
        cache = cls()
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                key = str(raw["image"])
                props = [Proposal(box=BBox.from_list(p["box"]), score=float(p["score"])) for p in raw["proposals"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, GeometryError) as exc:
                raise ProposalCacheError(f"{source} line {line_no}: invalid entry ({exc})") from exc
            if key in cache.entries:
                raise ProposalCacheError(f"duplicate image key in proposal cache: {key}", code="CACHE_DUPLICATE_KEY")
            cache.entries[key] = props
        return cache

    @classmethod
    def read(cls, path: Union[str, Path]) -> "ProposalCache":
        p = Path(path)
        if not p.exists():
            raise MissingInputError(f"proposal cache not found: {p}")
        cache = cls.from_jsonl(p.read_text(encoding="utf-8"), source=str(p))
        logger.info("read %d cached proposal lists from %s", len(cache), p)
        return cache


def cache_write(path: Union[str, Path], proposals: Mapping[str, List[Proposal]]) -> Path:
    return ProposalCache(proposals).write(path)


def cache_read(path: Union[str, Path]) -> ProposalCache:
    return ProposalCache.read(path)
