from __future__ import annotations

import csv
import json
import sqlite3
from pathlib import Path

from typer.testing import CliRunner

from OCL import cli as cli_module
from OCL.cli import app

runner = CliRunner()


def last_json(text: str):
    for line in reversed(text.strip().splitlines()):
        if line.startswith("{"):
            return json.loads(line)
    raise AssertionError(f"no JSON line in output:\n{text}")


def _invoke(command, config, out, *extra):
    return runner.invoke(app, [command, "-c", str(config), "-o", str(out), *extra])


def test_synth_gen_writes_dataset_and_echoes_config(prepared_run) -> None:
    data = prepared_run / "data"
    assert len((data / "manifest.jsonl").read_text().splitlines()) == 12
    assert len((data / "train.jsonl").read_text().splitlines()) == 9
    report = json.loads((data / "report.json").read_text())
    assert report["images"] == 12
    echoed = json.loads((prepared_run / "configs" / "synth-gen.json").read_text())
    assert echoed["synth"]["n_images"] == 12 and echoed["seed"] == 3
    assert "seed" not in echoed["synth"]


def test_every_command_lands_in_the_ledger(prepared_run) -> None:
    with sqlite3.connect(str(prepared_run / "runs.sqlite")) as conn:
        rows = conn.execute("SELECT command, outputs_json FROM runs").fetchall()
    assert {"synth-gen", "bing-train", "propose"} <= {command for command, _ in rows}
    propose_outputs = next(json.loads(outputs) for command, outputs in rows if command == "propose")
    assert list(propose_outputs) == ["proposals.jsonl"]


def test_recall_reports_proposals_and_random_baseline(prepared_run, tiny_config) -> None:
    result = _invoke("recall", tiny_config, prepared_run)
    assert result.exit_code == 0, result.output
    report = last_json(result.stdout)
    assert set(report) == {"proposals", "random"}
    assert report["proposals"]["k"] == report["random"]["k"]
    assert 0.0 <= report["proposals"]["recall"] <= 1.0
    assert json.loads((prepared_run / "recall.json").read_text()) == report


def test_propose_is_reproducible(prepared_run, tiny_config) -> None:
    result = _invoke("propose", tiny_config, prepared_run, "--set", "paths.proposals=again.jsonl")
    assert result.exit_code == 0, result.output
    assert (prepared_run / "again.jsonl").read_bytes() == (prepared_run / "proposals.jsonl").read_bytes()


def test_split_reproduces_the_generated_split(prepared_run, tiny_config, tmp_path) -> None:
    manifest = prepared_run / "data" / "manifest.jsonl"
    result = runner.invoke(
        app, ["split", "-m", str(manifest), "-c", str(tiny_config), "-o", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    assert last_json(result.stdout) == {"train": 9, "val": 3}

    def names(path):
        return [Path(json.loads(line)["image"]).name for line in path.read_text().splitlines()]

    assert names(tmp_path / "data" / "val.jsonl") == names(prepared_run / "data" / "val.jsonl")


def test_crop_dump_writes_pairs(prepared_run, tiny_config) -> None:
    result = _invoke("crop-dump", tiny_config, prepared_run)
    assert result.exit_code == 0, result.output
    crops = prepared_run / "crops"
    assert (crops / "000000_a.ppm").exists() and (crops / "000001_b.ppm").exists()
    pairs = [json.loads(line) for line in (crops / "pairs.jsonl").read_text().splitlines()]
    assert len(pairs) == 2
    assert pairs[0]["strategy"] == "obj-obj-dilate"


def test_pretrain_probe_and_overlap(prepared_run, tiny_config) -> None:
    result = _invoke("pretrain", tiny_config, prepared_run)
    assert result.exit_code == 0, result.output
    assert (prepared_run / "checkpoint.bin").exists()
    with (prepared_run / "metrics.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and rows[0]["epoch"] == "1"

    result = _invoke("probe", tiny_config, prepared_run)
    assert result.exit_code == 0, result.output
    probe = json.loads((prepared_run / "probe.json").read_text())
    assert probe["epoch"] == 1
    assert 0.0 <= probe["mAP"] <= 1.0
    assert (prepared_run / "probe_ap.csv").read_text().splitlines()[-1].startswith("mean,")

    result = _invoke("overlap", tiny_config, prepared_run)
    assert result.exit_code == 0, result.output
    report = last_json(result.stdout)
    assert report["strategy"] == "obj-obj-dilate"
    assert report["n_samples"] == 20


def test_pretrain_resume_continues_to_more_epochs(prepared_run, tiny_config, tmp_path) -> None:
    args = ["--set", "paths.checkpoint=resume.bin", "--set", "paths.metrics=resume.csv"]
    result = _invoke("pretrain", tiny_config, prepared_run, *args, "--set", "train.epochs=2", "--stop-after", "1")
    assert result.exit_code == 0, result.output
    with (prepared_run / "resume.csv").open() as fh:
        assert len(list(csv.DictReader(fh))) == 1

    result = _invoke("pretrain", tiny_config, prepared_run, *args, "--set", "train.epochs=2", "--resume")
    assert result.exit_code == 0, result.output
    with (prepared_run / "resume.csv").open() as fh:
        assert [r["epoch"] for r in csv.DictReader(fh)] == ["1", "2"]


def test_sweep_writes_one_row_per_point(prepared_run, tiny_config) -> None:
    result = _invoke("sweep", tiny_config, prepared_run)
    assert result.exit_code == 0, result.output
    with (prepared_run / "sweep.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["value"]) for r in rows] == [0.0, 0.2]


def test_sweep_preset_is_echoed_with_the_config(prepared_run, tiny_config, monkeypatch) -> None:
    seen = []

    def fake_sweep(spec, *args, **kwargs):
        seen.append((spec.param, list(spec.values)))
        return []

    monkeypatch.setattr(cli_module, "run_sweep", fake_sweep)
    result = _invoke("sweep", tiny_config, prepared_run, "--preset", "temperature")
    assert result.exit_code == 0, result.output
    echoed = json.loads((prepared_run / "configs" / "sweep.json").read_text())
    assert echoed["sweep"]["param"] == "temperature"
    assert seen == [("temperature", echoed["sweep"]["values"])]
    assert echoed["sweep"]["values"] == [0.05, 0.07, 0.1, 0.2, 0.3]


def test_bench_passes_a_low_baseline(prepared_run, tiny_config) -> None:
    (prepared_run / "baseline.json").write_text(json.dumps({"fps_mean": 1e-6}))
    result = _invoke("bench", tiny_config, prepared_run, "--set", "paths.baseline=baseline.json")
    assert result.exit_code == 0, result.output
    report = last_json(result.stdout)
    assert report["regression"]["ok"] is True
    assert report["fps_mean"] > 0
