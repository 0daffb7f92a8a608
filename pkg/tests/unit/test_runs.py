from __future__ import annotations

import json
import sqlite3

import pytest

from OCL.errors import LedgerError
from OCL.runs import RunDirectory, RunLedger, atomic_write_text, canonical_json, default_workers, file_sha256


def _rows(path):
    with sqlite3.connect(str(path)) as conn:
        return conn.execute("SELECT run_id, command, config_hash, outputs_json FROM runs ORDER BY created_at").fetchall()


def test_ledger_appends_one_row_per_run(tmp_path) -> None:
    ledger = RunLedger(tmp_path / "runs.sqlite")
    first = ledger.append("propose", "abc", {"proposals.jsonl": "00"})
    second = ledger.append("recall", "def", {})
    assert first != second
    rows = _rows(tmp_path / "runs.sqlite")
    assert {(r[0], r[1], r[2]) for r in rows} == {(first, "propose", "abc"), (second, "recall", "def")}
    assert json.loads(next(r[3] for r in rows if r[0] == first)) == {"proposals.jsonl": "00"}


def test_ledger_reopens_an_existing_file(tmp_path) -> None:
    RunLedger(tmp_path / "runs.sqlite").append("synth-gen", "abc", {})
    RunLedger(tmp_path / "runs.sqlite").append("bing-train", "abc", {})
    assert sorted(r[1] for r in _rows(tmp_path / "runs.sqlite")) == ["bing-train", "synth-gen"]


def test_corrupt_ledger_raises(tmp_path) -> None:
    path = tmp_path / "runs.sqlite"
    path.write_bytes(b"this is not a database, just some bytes " * 8)
    with pytest.raises(LedgerError) as exc:
        RunLedger(path)
    assert exc.value.code == "LEDGER_CORRUPT"
    assert exc.value.details["path"] == str(path)


def test_run_directory_records_output_hashes(tmp_path) -> None:
    run = RunDirectory(tmp_path / "out")
    resolved = {"seed": 1}
    echo = run.echo_config("probe", resolved)
    assert json.loads(echo.read_text()) == resolved
    artifact = atomic_write_text(run.path("probe.json"), canonical_json({"mAP": 0.5}))
    run_id = run.record("probe", resolved, [artifact, run.path("missing.json")])
    (row,) = _rows(tmp_path / "out" / RunDirectory.LEDGER_NAME)
    assert row[0] == run_id and row[1] == "probe"
    assert json.loads(row[3]) == {"probe.json": file_sha256(artifact)}


def test_atomic_write_leaves_no_temp_files(tmp_path) -> None:
    atomic_write_text(tmp_path / "a.txt", "one")
    atomic_write_text(tmp_path / "a.txt", "two")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
    assert (tmp_path / "a.txt").read_text() == "two"


def test_default_workers_env_override(monkeypatch) -> None:
    monkeypatch.setenv("OBJCROP_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("OBJCROP_WORKERS", "nope")
    assert default_workers() >= 1
