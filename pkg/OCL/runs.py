"""Atomic artifact writes, the run directory and its metadata ledger."""

from __future__ import annotations

import hashlib
import json
import os
import sqlite3
import tempfile
import uuid
from contextlib import closing
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Tuple, Union

from OCL.errors import LedgerError

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """Write via a temp file in the target directory and rename over the destination."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunLedger:
    """Append-only SQLite log of the commands run against one ``--out`` directory.

    One row per successful command: its name, the hash of the resolved config
    and the hashes of the files it wrote. Metadata only; no command reads it back.
    """

    SCHEMA = """
        CREATE TABLE IF NOT EXISTS runs (
            run_id TEXT PRIMARY KEY,
            command TEXT NOT NULL,
            created_at TEXT NOT NULL,
            config_hash TEXT NOT NULL,
            outputs_json TEXT NOT NULL
        )
    """

    def __init__(self, storage_path: PathLike) -> None:
        self.path = Path(storage_path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._execute(self.SCHEMA)

    def _execute(self, sql: str, params: Tuple[Any, ...] = ()) -> None:
        try:
            with closing(sqlite3.connect(str(self.path))) as conn, conn:
                conn.execute(sql, params)
        except sqlite3.DatabaseError as exc:
            raise LedgerError(
                f"run ledger {self.path} is not a readable SQLite database: {exc}", details={"path": str(self.path)}
            ) from exc

    def append(self, command: str, config_hash: str, outputs: Dict[str, str]) -> str:
        run_id = uuid.uuid4().hex[:16]
        created_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self._execute(
            "INSERT INTO runs(run_id, command, created_at, config_hash, outputs_json) VALUES (?, ?, ?, ?, ?)",
            (run_id, command, created_at, config_hash, json.dumps(outputs, sort_keys=True)),
        )
        return run_id


class RunDirectory:
    """The ``--out`` directory of a command: resolved-config echo, outputs, ledger."""

    LEDGER_NAME = "runs.sqlite"

    def __init__(self, root: PathLike) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.ledger = RunLedger(self.root / self.LEDGER_NAME)

    def path(self, relative: PathLike) -> Path:
        rel = Path(relative)
        return rel if rel.is_absolute() else self.root / rel

    def echo_config(self, command: str, resolved: Dict[str, Any]) -> Path:
        return atomic_write_text(self.root / "configs" / f"{command}.json", canonical_json(resolved))

    def record(self, command: str, resolved: Dict[str, Any], outputs: Iterable[PathLike]) -> str:
        hashes = {}
        for out in outputs:
            p = self.path(out)
            if p.is_file():
                hashes[str(p.relative_to(self.root)) if p.is_relative_to(self.root) else str(p)] = file_sha256(p)
        config_hash = hashlib.sha256(canonical_json(resolved).encode("utf-8")).hexdigest()
        return self.ledger.append(command, config_hash, hashes)


def default_workers() -> int:
    """Loader/generator thread count; ``OBJCROP_WORKERS`` overrides the CPU-based default."""
    raw = os.environ.get("OBJCROP_WORKERS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)
