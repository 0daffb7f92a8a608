"""Crop configuration, view roles and the view-pairing strategies."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from OCL.errors import ConfigError


class Role(str, Enum):
    OBJECT = "object"
    CONTEXT = "context"


class Strategy(str, Enum):
    SCENE_SCENE = "scene-scene"
    OBJ_SCENE = "obj-scene"
    OBJ_OBJ_DILATE = "obj-obj-dilate"
    OBJ_OBJ_SHIFT = "obj-obj-shift"
    DILATE_DILATE = "dilate-dilate"
    GT_SCENE = "gt-scene"
    GT_DILATE = "gt-dilate"
    MIXED = "mixed"

    @classmethod
    def parse(cls, value) -> "Strategy":
        """Accept enum values, member names or CamelCase names (``ObjObjDilate``)."""
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        kebab = re.sub(r"(?<=[a-z])(?=[A-Z])", "-", text).replace("_", "-").lower()
        try:
            return cls(kebab)
        except ValueError:
            raise ConfigError(
                f"unknown crop strategy '{value}', expected one of {[s.value for s in cls]}"
            ) from None

    @property
    def needs_boxes(self) -> bool:
        return self is not Strategy.SCENE_SCENE

    @property
    def uses_gt(self) -> bool:
        return self in (Strategy.GT_SCENE, Strategy.GT_DILATE)

    @property
    def roles(self) -> Tuple[Role, Role]:
        return _ROLES[self]


_ROLES = {
    Strategy.SCENE_SCENE: (Role.CONTEXT, Role.CONTEXT),
    Strategy.OBJ_SCENE: (Role.OBJECT, Role.CONTEXT),
    Strategy.OBJ_OBJ_DILATE: (Role.OBJECT, Role.CONTEXT),
    Strategy.OBJ_OBJ_SHIFT: (Role.OBJECT, Role.OBJECT),
    Strategy.DILATE_DILATE: (Role.CONTEXT, Role.CONTEXT),
    Strategy.GT_SCENE: (Role.OBJECT, Role.CONTEXT),
    Strategy.GT_DILATE: (Role.OBJECT, Role.CONTEXT),
    # resolved per image to one of MIXED_CHOICES
    Strategy.MIXED: (Role.OBJECT, Role.CONTEXT),
}

MIXED_CHOICES = (Strategy.OBJ_SCENE, Strategy.OBJ_OBJ_DILATE, Strategy.OBJ_OBJ_SHIFT)


@dataclass
class CropConfig:
    target: int = 32
    scale_lo: float = 0.2
    scale_hi: float = 1.0
    ratio_lo: float = 3.0 / 4.0
    ratio_hi: float = 4.0 / 3.0
    delta: float = 0.1
    shift_lo: float = 80.0
    shift_hi: float = 100.0
    s_min_override: Optional[float] = None
    min_crop_side: Optional[int] = None
    flip_p: float = 0.5

    @property
    def min_side(self) -> int:
        return self.target if self.min_crop_side is None else self.min_crop_side

    def validate(self) -> "CropConfig":
        if self.target < 1:
            raise ConfigError(f"crop.target must be >= 1, got {self.target}")
        if not 0 < self.scale_lo <= self.scale_hi <= 1:
            raise ConfigError(f"crop scale bounds need 0 < scale_lo <= scale_hi <= 1, got {self.scale_lo}, {self.scale_hi}")
        if not 0 < self.ratio_lo <= self.ratio_hi:
            raise ConfigError(f"crop ratio bounds need 0 < ratio_lo <= ratio_hi, got {self.ratio_lo}, {self.ratio_hi}")
        if self.delta < 0:
            raise ConfigError(f"crop.delta must be >= 0, got {self.delta}")
        if not 0 <= self.shift_lo <= self.shift_hi:
            raise ConfigError(f"crop shift range needs 0 <= shift_lo <= shift_hi, got {self.shift_lo}, {self.shift_hi}")
        if self.s_min_override is not None and not 0 < self.s_min_override <= 1:
            raise ConfigError(f"crop.s_min_override must lie in (0, 1], got {self.s_min_override}")
        if self.min_crop_side is not None and self.min_crop_side < 1:
            raise ConfigError(f"crop.min_crop_side must be >= 1, got {self.min_crop_side}")
        if not 0 <= self.flip_p <= 1:
            raise ConfigError(f"crop.flip_p must lie in [0, 1], got {self.flip_p}")
        return self
