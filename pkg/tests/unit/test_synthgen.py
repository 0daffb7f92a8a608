from __future__ import annotations

import json

import numpy as np
import pytest

from OCL.errors import ConfigError, ManifestError, MissingInputError
from OCL.imgcore import BBox, Rng, intersect
from OCL.synthgen import (
    MAX_CLASSES,
    DatasetManifest,
    GtObject,
    ImageRecord,
    SynthConfig,
    class_probabilities,
    class_style,
    coverage,
    generate,
    plan_image,
    split,
)
from OCL.synthgen.shapes import tight_extent


def test_zero_images_gives_empty_manifest(tmp_path, make_synth_config) -> None:
    result = generate(make_synth_config(n_images=0), tmp_path)
    assert result.manifest.records == []
    assert result.manifest_path.read_text() == ""
    assert result.report["images"] == 0


def test_generation_is_deterministic_across_worker_counts(tmp_path, make_synth_config) -> None:
    a = generate(make_synth_config(n_images=5, workers=1), tmp_path / "a")
    b = generate(make_synth_config(n_images=5, workers=3), tmp_path / "b")
    assert a.manifest_path.read_text() == b.manifest_path.read_text()
    for rec in a.manifest.records:
        assert (tmp_path / "a" / rec.image).read_bytes() == (tmp_path / "b" / rec.image).read_bytes()


def test_seed_changes_the_dataset(tmp_path, make_synth_config) -> None:
    a = generate(make_synth_config(n_images=3, seed=1), tmp_path / "a")
    b = generate(make_synth_config(n_images=3, seed=2), tmp_path / "b")
    assert a.manifest_path.read_text() != b.manifest_path.read_text()


def test_generated_objects_are_valid(tiny_dataset) -> None:
    manifest = tiny_dataset.manifest
    assert len(manifest) == 12
    for rec in manifest.records:
        assert (rec.width, rec.height) == (48, 48)
        assert 1 <= len(rec.objects) <= 3
        for i, obj in enumerate(rec.objects):
            assert obj.box.inside(48, 48)
            assert 0 <= obj.class_id < 8
            for other in rec.objects[i + 1 :]:
                assert intersect(obj.box, other.box) is None
        assert (manifest.root / rec.image).exists()


def test_report_counts(tiny_dataset) -> None:
    report = json.loads((tiny_dataset.manifest_path.parent / "report.json").read_text())
    objects = sum(len(r.objects) for r in tiny_dataset.manifest.records)
    assert report["objects"] == objects
    assert sum(report["class_histogram"].values()) == objects
    assert "workers" not in report["config"]


def test_split_files_partition_the_manifest(tiny_dataset) -> None:
    train = DatasetManifest.read(tiny_dataset.train_path)
    val = DatasetManifest.read(tiny_dataset.val_path)
    assert len(train) == 9 and len(val) == 3
    names = [r.image for r in train.records] + [r.image for r in val.records]
    assert sorted(names) == sorted(r.image for r in tiny_dataset.manifest.records)


def test_split_ratio_and_determinism(tiny_dataset) -> None:
    manifest = tiny_dataset.manifest.subset(tiny_dataset.manifest.records[:10])
    train, val = split(manifest, 0.9, seed=4)
    assert (len(train), len(val)) == (9, 1)
    again, _ = split(manifest, 0.9, seed=4)
    assert [r.image for r in again.records] == [r.image for r in train.records]
    with pytest.raises(ConfigError):
        split(manifest, 1.0, seed=4)


def test_class_probabilities() -> None:
    flat = class_probabilities(4, 0.0)
    assert np.allclose(flat, 0.25)
    tail = class_probabilities(4, 1.0)
    assert tail.sum() == pytest.approx(1.0)
    assert list(tail) == sorted(tail, reverse=True)


def test_long_tail_class_frequencies_follow_the_power_law() -> None:
    cfg = SynthConfig(longtail_exponent=1.0, n_classes=32)
    counts = np.zeros(cfg.n_classes)
    for i in range(10_000):
        for obj in plan_image(cfg, i, Rng(cfg.seed).derive(f"image:{i}")).objects:
            counts[obj.class_id] += 1
    observed = counts / counts.sum()
    expected = class_probabilities(cfg.n_classes, 1.0)
    relative_error = np.abs(observed[:10] - expected[:10]) / expected[:10]
    assert relative_error.max() <= 0.10


def test_class_style_covers_every_class() -> None:
    styles = {class_style(c) for c in range(MAX_CLASSES)}
    assert len(styles) == MAX_CLASSES


def test_coverage_and_tight_extent() -> None:
    cov = coverage("square", 10)
    assert cov.shape == (10, 10)
    assert 0.0 <= cov.min() and cov.max() <= 1.0
    x, y, w, h = tight_extent("square", 10)
    assert (x, y) == (1, 1) and (w, h) == (8, 8)


def test_plan_meets_minimum_distinct_classes(make_synth_config) -> None:
    cfg = make_synth_config(objects_min=3, objects_max=3, min_distinct_classes=3)
    for i in range(10):
        plan = plan_image(cfg, i, Rng(0).derive(f"image:{i}"))
        if plan.dropped == 0:
            assert len({o.class_id for o in plan.objects}) == 3


def test_synth_config_validation(make_synth_config) -> None:
    with pytest.raises(ConfigError):
        make_synth_config(n_classes=2, min_distinct_classes=3).validate()
    with pytest.raises(ConfigError):
        make_synth_config(n_classes=MAX_CLASSES + 1).validate()


# --- manifest ---
def test_manifest_round_trip_and_relocation(tiny_dataset, tmp_path) -> None:
    manifest = tiny_dataset.manifest
    moved = manifest.relocated(tmp_path)
    path = moved.write(tmp_path / "copy.jsonl")
    back = DatasetManifest.read(path)
    assert back.records == moved.records
    back.validate(n_classes=8)
    assert back.load_image(back.records[0]) == manifest.load_image(manifest.records[0])


def test_manifest_validation_errors(tmp_path) -> None:
    rec = ImageRecord("images/a.ppm", 16, 16, (GtObject(9, BBox(0, 0, 4, 4)),))
    manifest = DatasetManifest(root=tmp_path, records=[rec])
    with pytest.raises(ManifestError) as exc:
        manifest.validate(n_classes=8, check_files=False)
    assert exc.value.code == "CLASS_OUT_OF_RANGE"
    with pytest.raises(MissingInputError):
        manifest.validate(check_files=True)
    outside = ImageRecord("images/b.ppm", 16, 16, (GtObject(0, BBox(10, 10, 10, 10)),))
    with pytest.raises(ManifestError):
        DatasetManifest(root=tmp_path, records=[outside]).validate(check_files=False)


def test_manifest_read_errors(tmp_path) -> None:
    with pytest.raises(MissingInputError):
        DatasetManifest.read(tmp_path / "none.jsonl")
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"image": "a.ppm", "width": 4}\n')
    with pytest.raises(ManifestError, match="line 1"):
        DatasetManifest.read(bad)
