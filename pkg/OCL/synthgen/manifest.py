"""JSONL dataset manifest: one record per image with its ground-truth objects.

Record schema::

    {"image": "images/000000.ppm", "width": 128, "height": 128,
     "objects": [{"class": 3, "box": [x, y, w, h]}, ...]}

Image paths are relative to the directory holding the manifest.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from OCL.errors import GeometryError, ManifestError, MissingInputError
from OCL.imgcore import BBox, ImageRGB, load_ppm


@dataclass(frozen=True)
class GtObject:
    class_id: int
    box: BBox

    def to_dict(self) -> dict:
        return {"class": self.class_id, "box": self.box.to_list()}


@dataclass(frozen=True)
class ImageRecord:
    image: str
    width: int
    height: int
    objects: Tuple[GtObject, ...] = ()

    @property
    def boxes(self) -> List[BBox]:
        return [o.box for o in self.objects]

    @property
    def classes(self) -> List[int]:
        return sorted({o.class_id for o in self.objects})

    def to_dict(self) -> dict:
        return {
            "image": self.image,
            "width": self.width,
            "height": self.height,
            "objects": [o.to_dict() for o in self.objects],
        }

    @classmethod
    def from_dict(cls, raw: dict, line_no: int = 0) -> "ImageRecord":
        try:
            objects = tuple(
                GtObject(class_id=int(o["class"]), box=BBox.from_list(o["box"])) for o in raw.get("objects", [])
            )
            return cls(image=str(raw["image"]), width=int(raw["width"]), height=int(raw["height"]), objects=objects)
        except (KeyError, TypeError, ValueError, GeometryError) as exc:
            raise ManifestError(f"manifest line {line_no}: invalid record ({exc})") from exc


@dataclass
class DatasetManifest:
    root: Path
    records: List[ImageRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ImageRecord]:
        return iter(self.records)

    def by_image(self) -> Dict[str, ImageRecord]:
        return {r.image: r for r in self.records}

    def image_path(self, record: ImageRecord) -> Path:
        return self.root / record.image

    def load_image(self, record: ImageRecord) -> ImageRGB:
        img = load_ppm(self.image_path(record))
        if (img.width, img.height) != (record.width, record.height):
            raise ManifestError(
                f"{record.image}: file is {img.width}x{img.height}, manifest says {record.width}x{record.height}"
            )
        return img

    def subset(self, records: Sequence[ImageRecord]) -> "DatasetManifest":
        return DatasetManifest(root=self.root, records=list(records))

    def relocated(self, new_root: Union[str, Path]) -> "DatasetManifest":
        """Same records with image paths rewritten relative to ``new_root``."""
        target = Path(new_root)
        records = [
            ImageRecord(
                image=Path(os.path.relpath(self.image_path(r).resolve(), target.resolve())).as_posix(),
                width=r.width,
                height=r.height,
                objects=r.objects,
            )
            for r in self.records
        ]
        return DatasetManifest(root=target, records=records)

    def validate(self, n_classes: Optional[int] = None, check_files: bool = True) -> "DatasetManifest":
        seen = set()
        for rec in self.records:
            if rec.image in seen:
                raise ManifestError(f"duplicate image key in manifest: {rec.image}")
            seen.add(rec.image)
            if rec.width < 1 or rec.height < 1:
                raise ManifestError(f"{rec.image}: invalid size {rec.width}x{rec.height}")
            for obj in rec.objects:
                if not obj.box.inside(rec.width, rec.height):
                    raise ManifestError(f"{rec.image}: box {obj.box.to_list()} outside image")
                if obj.class_id < 0 or (n_classes is not None and obj.class_id >= n_classes):
                    raise ManifestError(
                        f"{rec.image}: class id {obj.class_id} outside [0, {n_classes})",
                        code="CLASS_OUT_OF_RANGE",
                    )
            if check_files and not self.image_path(rec).exists():
                raise MissingInputError(f"{rec.image}: referenced image file does not exist")
        return self

    # --- JSONL I/O ---
    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.records)

    def write(self, path: Union[str, Path]) -> Path:
        from OCL.runs import atomic_write_text

        return atomic_write_text(path, self.to_jsonl())

    @classmethod
    def read(cls, path: Union[str, Path], root: Optional[Union[str, Path]] = None) -> "DatasetManifest":
        p = Path(path)
        if not p.exists():
            raise MissingInputError(f"manifest not found: {p}")
        records = []
        for line_no, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"manifest line {line_no}: {exc}") from exc
            records.append(ImageRecord.from_dict(raw, line_no))
        manifest = cls(root=Path(root) if root is not None else p.parent, records=records)
        manifest.validate(check_files=False)
        return manifest
