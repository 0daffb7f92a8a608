from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from OCL.cropper import CropConfig, Strategy, compute_smin
from OCL.errors import ConfigError, ManifestError, MetricError
from OCL.evalkit import (
    ProbeConfig,
    SweepSpec,
    apply_point,
    average_precision,
    bench_proposals,
    check_regression,
    extract_features,
    features_from_state,
    linear_probe,
    mean_average_precision,
    object_fraction,
    overlap_report,
    run_point,
    run_sweep,
)
from OCL.evalkit import sweep as sweep_module
from OCL.evalkit.probe import fit_logistic
from OCL.evalkit.sweep import value_key
from OCL.imgcore import BBox, Rng
from OCL.objectness import BingModel, quantized_sizes
from OCL.objectness.model import identity_calibration
from OCL.ssl import ModelState, TrainConfig, pretrain, save_checkpoint
from OCL.objectness.sources import GroundTruthSource
from OCL.synthgen import DatasetManifest, GtObject, ImageRecord, SynthConfig, plan_image


def small_train_config(**overrides) -> TrainConfig:
    values = dict(
        epochs=1,
        batch_size=3,
        queue_size=3,
        hidden=16,
        feature_dim=8,
        head_hidden=8,
        embed_dim=4,
        stats_images=4,
        workers=1,
        crop=CropConfig(target=8, min_crop_side=8),
    )
    values.update(overrides)
    return TrainConfig(**values)


# --- average precision ---
def _brute_force_ap(scores, labels) -> float:
    n = len(scores)
    precisions = []
    for i in range(n):
        if not labels[i]:
            continue
        ahead = [j for j in range(n) if scores[j] > scores[i] or (scores[j] == scores[i] and j <= i)]
        precisions.append(sum(labels[j] for j in ahead) / len(ahead))
    return sum(precisions) / len(precisions)


def test_average_precision_examples() -> None:
    assert average_precision([0.9, 0.8, 0.1], [True, True, False]) == 1.0
    assert average_precision([0.9, 0.8, 0.7], [False, True, True]) == pytest.approx(7 / 12)


@pytest.mark.parametrize("seed", range(8))
def test_average_precision_matches_brute_force_with_ties(seed: int) -> None:
    rng = Rng(seed)
    scores = [float(v) for v in rng.integers(0, 4, 12)]
    labels = [bool(v) for v in rng.integers(0, 2, 12)]
    labels[0] = True
    assert average_precision(scores, labels) == pytest.approx(_brute_force_ap(scores, labels))


def test_average_precision_errors() -> None:
    with pytest.raises(MetricError):
        average_precision([0.1, 0.2], [False, False])
    with pytest.raises(MetricError) as exc:
        average_precision([0.1], [True, False])
    assert exc.value.code == "METRIC_SHAPE"


def test_mean_average_precision_skips_classes_without_positives() -> None:
    scores = np.array([[0.9, 0.1], [0.2, 0.8]])
    labels = np.array([[True, False], [False, False]])
    per_class, m_ap, skipped = mean_average_precision(scores, labels, class_ids=[3, 5])
    assert per_class == {3: 1.0}
    assert m_ap == 1.0
    assert skipped == [5]


# --- probe ---
def test_probe_on_separable_features_is_perfect() -> None:
    rng = Rng(1)
    labels = np.zeros((40, 2), dtype=bool)
    labels[:20, 0] = True
    labels[20:, 1] = True
    features = rng.normal((40, 3), scale=0.1)
    features[:20, 0] += 2.0
    features[20:, 0] -= 2.0
    result = linear_probe(features[::2], labels[::2], features[1::2], labels[1::2], ProbeConfig(epochs=200))
    assert result.mean_ap == 1.0
    payload = result.to_dict()
    assert set(payload) == {"mAP", "per_class_ap", "skipped_classes"}
    assert result.to_csv().splitlines()[-1] == "mean,1.0"


def test_probe_must_stay_frozen() -> None:
    with pytest.raises(ConfigError):
        ProbeConfig(frozen=False).validate()
    with pytest.raises(MetricError):
        linear_probe(np.zeros((3, 2)), np.zeros((2, 1), dtype=bool), np.zeros((1, 2)), np.ones((1, 1), bool), ProbeConfig())


def test_untrained_probe_scores_every_image_one_half() -> None:
    rng = Rng(4)
    features = rng.normal((30, 4))
    labels = np.asarray(rng.integers(0, 2, (30, 3)), dtype=bool)
    labels[0] = True
    w, b = fit_logistic(features, labels, ProbeConfig(epochs=0))
    assert not w.any() and not b.any()
    result = linear_probe(features[:10], labels[:10], features[10:], labels[10:], ProbeConfig(epochs=0))
    val = labels[10:]
    expected = [_brute_force_ap([0.5] * len(val), list(val[:, c])) for c in range(3) if val[:, c].any()]
    assert result.mean_ap == pytest.approx(float(np.mean(expected)))


def _shuffled_label_maps(train_x, train_y, val_x, val_y, n_shuffles: int = 20):
    rng = Rng(17)
    cfg = ProbeConfig(epochs=100)
    return np.asarray(
        [
            linear_probe(train_x, train_y[rng.permutation(len(train_y))], val_x, val_y, cfg).mean_ap
            for _ in range(n_shuffles)
        ]
    )


def test_probe_on_uninformative_features_stays_inside_the_shuffled_null() -> None:
    rng = Rng(3)
    features = rng.normal((100, 5))
    labels = np.asarray(rng.integers(0, 2, (100, 3)), dtype=bool)
    train_x, train_y, val_x, val_y = features[:60], labels[:60], features[60:], labels[60:]
    observed = linear_probe(train_x, train_y, val_x, val_y, ProbeConfig(epochs=100)).mean_ap
    null = _shuffled_label_maps(train_x, train_y, val_x, val_y)
    assert abs(observed - null.mean()) <= 3 * null.std()


def test_probe_on_informative_features_beats_the_shuffled_null() -> None:
    rng = Rng(3)
    labels = np.asarray(rng.integers(0, 2, (100, 3)), dtype=bool)
    features = rng.normal((100, 5), scale=0.5)
    features[:, :3] += 2.0 * labels
    train_x, train_y, val_x, val_y = features[:60], labels[:60], features[60:], labels[60:]
    observed = linear_probe(train_x, train_y, val_x, val_y, ProbeConfig(epochs=100)).mean_ap
    null = _shuffled_label_maps(train_x, train_y, val_x, val_y)
    assert observed > null.mean() + 3 * null.std()


# --- features ---
def test_features_are_deterministic_and_multi_hot(tiny_dataset, tmp_path) -> None:
    manifest = tiny_dataset.manifest
    cfg = small_train_config()
    state = ModelState.initial(cfg)
    path = save_checkpoint(tmp_path / "init.bin", state, cfg)
    one = manifest.subset(manifest.records[:1])
    a = extract_features(path, one, 8)
    b = extract_features(path, one, 8)
    assert a.features.shape == (1, 8)
    assert np.array_equal(a.features, b.features)
    assert int(a.labels[0].sum()) == len(one.records[0].classes)


def test_trained_features_differ_from_random_init(tiny_dataset) -> None:
    manifest = DatasetManifest.read(tiny_dataset.train_path)
    cfg = small_train_config(lr=0.1)
    trained = pretrain(manifest, cfg).state
    initial = ModelState.initial(cfg, trained.input_mean, trained.input_std)
    f_trained = features_from_state(trained, 8, manifest, 8).features
    f_init = features_from_state(initial, 8, manifest, 8).features
    assert np.linalg.norm(f_trained - f_init) > 0


def test_feature_labels_reject_out_of_range_classes(tiny_dataset) -> None:
    state = ModelState.initial(small_train_config())
    with pytest.raises(ManifestError):
        features_from_state(state, 8, tiny_dataset.manifest, 1)


# --- overlap analytics ---
def _fake_manifest(tmp_path, box: BBox, side: int = 48) -> DatasetManifest:
    rec = ImageRecord("images/x.ppm", side, side, (GtObject(0, box),))
    return DatasetManifest(root=tmp_path, records=[rec])


def test_object_fraction() -> None:
    region = BBox(0, 0, 10, 10)
    assert object_fraction(region, [BBox(0, 0, 5, 10)]) == 0.5
    assert object_fraction(region, [BBox(0, 0, 5, 10), BBox(0, 0, 10, 5)]) == 0.75
    assert object_fraction(region, [BBox(20, 20, 3, 3)]) == 0.0


def test_identical_views_overlap_fully(tmp_path) -> None:
    manifest = _fake_manifest(tmp_path, BBox(10, 10, 20, 20))
    cfg = CropConfig(target=8, min_crop_side=8, delta=0.0, s_min_override=1.0, ratio_lo=1.0, ratio_hi=1.0, flip_p=0.0)
    report = overlap_report(manifest, Strategy.DILATE_DILATE, cfg, n_samples=10, seed=0)
    assert report["view_overlap"]["mean"] == 1.0
    assert report["object_pixel_fraction"]["mean"] == 1.0
    assert report["empty_intersections"] == 0


def test_full_image_object_fills_every_intersection(tmp_path) -> None:
    manifest = _fake_manifest(tmp_path, BBox(0, 0, 48, 48))
    report = overlap_report(manifest, Strategy.SCENE_SCENE, CropConfig(target=8), n_samples=25, seed=3)
    assert report["n_samples"] == 25
    assert report["object_pixel_fraction"]["count"] + report["empty_intersections"] == 25
    if report["object_pixel_fraction"]["count"]:
        assert report["object_pixel_fraction"]["mean"] == 1.0
    assert 0.0 <= report["view_overlap"]["mean"] <= 1.0


def test_overlap_report_is_seeded(tiny_dataset) -> None:
    manifest = tiny_dataset.manifest
    cfg = CropConfig(target=8, min_crop_side=8)
    a = overlap_report(manifest, Strategy.GT_DILATE, cfg, n_samples=30, seed=1)
    assert a == overlap_report(manifest, Strategy.GT_DILATE, cfg, n_samples=30, seed=1)
    assert a["strategy"] == "gt-dilate"


def test_overlap_report_names_its_box_source(tmp_path) -> None:
    manifest = _fake_manifest(tmp_path, BBox(10, 10, 20, 20))
    cfg = CropConfig(target=8, min_crop_side=8)
    assert overlap_report(manifest, Strategy.OBJ_SCENE, cfg, n_samples=5, seed=0)["source"] == "gt"
    assert overlap_report(manifest, Strategy.SCENE_SCENE, cfg, n_samples=5, seed=0)["source"] is None


def _layout_manifest(tmp_path, n_images: int) -> DatasetManifest:
    """Default-sized layouts without pixels; overlap geometry never reads the images."""
    cfg = SynthConfig(n_images=n_images)
    records = []
    for i in range(n_images):
        plan = plan_image(cfg, i, Rng(cfg.seed).derive(f"image:{i}"))
        objects = tuple(GtObject(o.class_id, o.box) for o in plan.objects)
        records.append(ImageRecord(f"images/{i:05d}.ppm", cfg.img_side, cfg.img_side, objects))
    return DatasetManifest(root=tmp_path, records=records)


def test_default_crops_order_view_overlap_by_strategy(tmp_path) -> None:
    manifest = _layout_manifest(tmp_path, 300)
    cfg = CropConfig()
    sizes = {rec.image: (rec.width, rec.height) for rec in manifest.records}
    s_min = compute_smin({rec.image: rec.boxes for rec in manifest.records}, sizes, cfg.scale_lo)
    assert s_min == 1.0
    means = {}
    for strategy in (Strategy.OBJ_OBJ_DILATE, Strategy.OBJ_SCENE, Strategy.SCENE_SCENE):
        report = overlap_report(manifest, strategy, cfg, 2000, 0, source=GroundTruthSource(), s_min=s_min)
        means[strategy] = report["view_overlap"]["mean"]
    assert means[Strategy.OBJ_OBJ_DILATE] >= means[Strategy.OBJ_SCENE]
    assert means[Strategy.OBJ_SCENE] > means[Strategy.SCENE_SCENE] + 0.05


# --- sweeps ---
def test_apply_point() -> None:
    base = small_train_config()
    assert apply_point(base, "delta", 0.3, 5).crop.delta == 0.3
    assert apply_point(base, "delta", 0.3, 5).seed == 5
    assert base.crop.delta == 0.1
    shifted = apply_point(base, "shift", [10, 20], 0)
    assert (shifted.crop.shift_lo, shifted.crop.shift_hi) == (10.0, 20.0)
    assert apply_point(base, "temperature", 0.07, 0).temperature == 0.07
    assert apply_point(base, "n_max", 3, 0).to_dict() == apply_point(base, "delta", 0.1, 0).to_dict()


def test_sweep_spec_validation() -> None:
    with pytest.raises(ConfigError):
        SweepSpec(param="depth").validate()
    with pytest.raises(ConfigError):
        SweepSpec(seeds=[]).validate()
    with pytest.raises(ConfigError):
        SweepSpec(param="shift", values=[5]).validate()
    assert value_key(0.1) == "0.1" and value_key(3) == "3" and value_key([1, 2]) == "[1.0, 2.0]"


def test_sweep_writes_grid_and_resumes(tiny_dataset, tmp_path, monkeypatch) -> None:
    calls = []

    def fake_point(cfg, probe_cfg, train_m, val_m, n_classes, source, s_min):
        calls.append((cfg.crop.delta, cfg.seed))
        return cfg.crop.delta, 0.9, 0.1

    monkeypatch.setattr(sweep_module, "run_point", fake_point)
    out = tmp_path / "sweep.csv"
    manifest = tiny_dataset.manifest
    base = small_train_config()
    rows = run_sweep(SweepSpec(values=[0.0], seeds=[0, 1]), base, ProbeConfig(), manifest, manifest, 8, out)
    assert len(rows) == 2 and len(calls) == 2

    rows = run_sweep(SweepSpec(values=[0.0, 0.2], seeds=[0, 1], jobs=2), base, ProbeConfig(), manifest, manifest, 8, out)
    assert len(calls) == 4
    assert sorted(calls[2:]) == [(0.2, 0), (0.2, 1)]
    with open(out, newline="") as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["param", "value", "seed", "map", "pos_sim", "neg_sim"]
    assert [(r[1], r[2]) for r in table[1:]] == [("0.0", "0"), ("0.0", "1"), ("0.2", "0"), ("0.2", "1")]
    assert [r.map for r in rows] == [0.0, 0.0, 0.2, 0.2]


def test_run_point_end_to_end(tiny_dataset) -> None:
    train = DatasetManifest.read(tiny_dataset.train_path)
    val = DatasetManifest.read(tiny_dataset.val_path)
    m_ap, pos, neg = run_point(small_train_config(), ProbeConfig(epochs=20), train, val, 8)
    assert 0.0 <= m_ap <= 1.0
    assert -1.0 <= pos <= 1.0


# --- bench ---
def _tiny_model() -> BingModel:
    sizes = quantized_sizes((16, 32))
    return BingModel(stage1=Rng(0).normal(64), bias=0.0, sizes=sizes, calibration=identity_calibration(len(sizes)))


def test_bench_with_fake_clock() -> None:
    ticks = iter(np.arange(0.0, 100.0, 0.01))
    report = bench_proposals(_tiny_model(), width=32, height=32, n_iters=5, warmup=1, clock=lambda: float(next(ticks)))
    assert report["samples"] == 5
    assert report["fps_mean"] == pytest.approx(100.0)
    assert report["latency_ms"]["p50"] == pytest.approx(10.0)
    with pytest.raises(ConfigError):
        bench_proposals(_tiny_model(), n_iters=0)


def test_check_regression() -> None:
    base = {"fps_mean": 100.0}
    assert check_regression({"fps_mean": 85.0}, base, 0.2)["ok"]
    failed = check_regression({"fps_mean": 70.0}, base, 0.2)
    assert not failed["ok"]
    assert failed["floor"] == pytest.approx(80.0)
    with pytest.raises(ConfigError):
        check_regression({"fps_mean": 1.0}, base, 1.0)


BASELINE = Path(__file__).resolve().parents[2] / "benchmarks" / "baseline.json"


def test_committed_baseline_gates_a_bench_report() -> None:
    baseline = json.loads(BASELINE.read_text())
    assert (baseline["width"], baseline["height"]) == (300, 300)
    assert baseline["latency_ms"]["mean"] == pytest.approx(1e3 / baseline["fps_mean"])

    def clock_for(seconds_per_call: float):
        ticks = iter(np.arange(0.0, 1e4, seconds_per_call))
        return lambda: float(next(ticks))

    at_floor = bench_proposals(_tiny_model(), width=32, height=32, n_iters=4, warmup=0, clock=clock_for(0.25))
    assert set(baseline) - {"note"} == set(at_floor)
    gate = check_regression(at_floor, baseline, 0.2)
    assert gate["ok"] and gate["ratio"] == pytest.approx(1.0)
    slower = bench_proposals(_tiny_model(), width=32, height=32, n_iters=4, warmup=0, clock=clock_for(0.4))
    failed = check_regression(slower, baseline, 0.2)
    assert not failed["ok"]
    assert failed["floor"] == pytest.approx(3.2)
