"""Embedded file-backed document store.

Keyed JSON collections with per-key atomic writes (temp file + rename).
Holds account metadata, grant indexes and audit pointers; never record
keys or plaintext. Keys are arbitrary strings; file names are their
hashes so emails and hex keys are equally safe.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterator


class DocumentStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, collection: str, key: str) -> Path:
        name = hashlib.sha256(key.encode()).hexdigest() + ".json"
        return self.root / collection / name

    def put(self, collection: str, key: str, doc: dict[str, Any]) -> None:
        path = self._path(collection, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"key": key, "doc": doc}, indent=2, sort_keys=True))
        tmp.replace(path)

    def get(self, collection: str, key: str) -> dict[str, Any] | None:
        path = self._path(collection, key)
        if not path.exists():
            return None
        return json.loads(path.read_text())["doc"]

    def delete(self, collection: str, key: str) -> None:
        self._path(collection, key).unlink(missing_ok=True)

    def items(self, collection: str) -> Iterator[tuple[str, dict[str, Any]]]:
        folder = self.root / collection
        if not folder.exists():
            return
        entries = []
        for path in folder.glob("*.json"):
            record = json.loads(path.read_text())
            entries.append((record["key"], record["doc"]))
        yield from sorted(entries, key=lambda pair: pair[0])
