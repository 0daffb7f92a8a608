from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from OCL.synthgen.generator import SynthConfig, generate  # noqa: E402


def tiny_synth_config(**overrides) -> SynthConfig:
    values = dict(
        n_images=12,
        img_side=48,
        objects_min=2,
        objects_max=3,
        n_classes=8,
        obj_scale_lo=0.2,
        obj_scale_hi=0.35,
        min_distinct_classes=2,
        workers=1,
        seed=3,
    )
    values.update(overrides)
    return SynthConfig(**values)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Twelve 48x48 synthetic images with a 75/25 train/val split."""
    out = tmp_path_factory.mktemp("tiny_dataset")
    return generate(tiny_synth_config(), out)


@pytest.fixture
def make_synth_config():
    return tiny_synth_config
