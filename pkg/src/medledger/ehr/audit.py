"""Append-only access audit log: one newline-delimited record per event."""

from __future__ import annotations

import json
import time
from pathlib import Path


class AuditLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, caller: str, record: str, action: str, outcome: str) -> None:
        entry = {
            "timestamp": int(time.time() * 1000),
            "caller": caller,
            "record": record,
            "action": action,
            "outcome": outcome,
        }
        with self.path.open("a") as handle:
            handle.write(json.dumps(entry, sort_keys=True) + "\n")

    def entries(self) -> list[dict]:
        if not self.path.exists():
            return []
        return [json.loads(line) for line in self.path.read_text().splitlines() if line]
