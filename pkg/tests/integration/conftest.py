from __future__ import annotations

import pytest
from typer.testing import CliRunner

from OCL.cli import app

TINY_CONFIG = """\
seed: 3
synth:
  n_images: 12
  img_side: 48
  objects_min: 2
  objects_max: 3
  n_classes: 8
  obj_scale_lo: 0.2
  obj_scale_hi: 0.35
  workers: 2
bing:
  sides: [8, 16, 32]
  epochs: 2
  negatives_per_image: 8
crop:
  target: 8
  min_crop_side: 8
train:
  epochs: 1
  batch_size: 3
  queue_size: 6
  hidden: 16
  feature_dim: 8
  head_hidden: 8
  embed_dim: 4
  stats_images: 4
  workers: 1
  strategy: obj-obj-dilate
probe:
  epochs: 20
sweep:
  values: [0.0, 0.2]
analysis:
  overlap_samples: 20
  dump_pairs: 2
bench:
  width: 32
  height: 32
  n_iters: 2
  warmup: 0
"""


@pytest.fixture(scope="session")
def tiny_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("config") / "tiny.yml"
    path.write_text(TINY_CONFIG)
    return path


@pytest.fixture(scope="module")
def prepared_run(tmp_path_factory, tiny_config):
    """An --out directory holding the dataset, a trained model and the proposal cache."""
    runner = CliRunner()
    out = tmp_path_factory.mktemp("run")
    for command in ("synth-gen", "bing-train", "propose"):
        result = runner.invoke(app, [command, "-c", str(tiny_config), "-o", str(out)])
        assert result.exit_code == 0, result.output
    return out
