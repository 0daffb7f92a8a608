"""Synthetic multi-object scenes with ground-truth boxes, and their JSONL manifests."""

from OCL.synthgen.generator import (
    GenerationResult,
    ImagePlan,
    PlacedObject,
    SynthConfig,
    class_probabilities,
    generate,
    plan_image,
    render_plan,
    split,
)
from OCL.synthgen.manifest import DatasetManifest, GtObject, ImageRecord
from OCL.synthgen.shapes import COLORS, MAX_CLASSES, SHAPES, class_style, coverage

__all__ = [
    "COLORS",
    "DatasetManifest",
    "GenerationResult",
    "GtObject",
    "ImagePlan",
    "ImageRecord",
    "MAX_CLASSES",
    "PlacedObject",
    "SHAPES",
    "SynthConfig",
    "class_probabilities",
    "class_style",
    "coverage",
    "generate",
    "plan_image",
    "render_plan",
    "split",
]
