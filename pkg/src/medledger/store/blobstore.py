"""Content-addressed blob storage.

Blobs are addressed by the hash of their bytes: identical content maps to
one id and is stored once; every read re-hashes the backing file so
corruption can never be returned as valid content. A small registry plays
the role of a DHT: blobs at or under the inline threshold are carried
inline in their registry record, larger ones are resolved through the set
of node ids that announced them.

On-disk layout: one file per content id under ``<root>/blobs/`` named by
hex digest, plus ``<root>/registry.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..crypto import Digest, hash_digest

INLINE_THRESHOLD = 1024


class NotFound(Exception):
    """No blob stored or announced under the requested id."""


class IntegrityMismatch(Exception):
    """Backing bytes no longer hash to the requested id."""


@dataclass(frozen=True, order=True)
class ContentId:
    digest: Digest

    @classmethod
    def of(cls, blob: bytes) -> "ContentId":
        return cls(hash_digest(blob))

    @classmethod
    def from_hex(cls, text: str) -> "ContentId":
        return cls(Digest.from_hex(text))

    @property
    def hex(self) -> str:
        return self.digest.hex

    def __str__(self) -> str:
        return self.hex


@dataclass(frozen=True)
class DhtRecord:
    """Resolution record: inline bytes for small blobs, else the holder set."""

    cid: ContentId
    inline: bytes | None = None
    holders: frozenset[str] = field(default_factory=frozenset)


class BlobStore:
    """File-backed store; everything is pinned, nothing is evicted."""

    def __init__(self, root: str | Path, inline_threshold: int = INLINE_THRESHOLD):
        self.root = Path(root)
        self.inline_threshold = inline_threshold
        self._blob_dir = self.root / "blobs"
        self._blob_dir.mkdir(parents=True, exist_ok=True)
        self._registry_path = self.root / "registry.json"
        self._holders: dict[str, set[str]] = {}
        self._sizes: dict[str, int] = {}
        self._load_registry()

    def _load_registry(self) -> None:
        if not self._registry_path.exists():
            return
        data = json.loads(self._registry_path.read_text())
        self._holders = {cid: set(nodes) for cid, nodes in data.get("holders", {}).items()}
        self._sizes = {cid: int(size) for cid, size in data.get("sizes", {}).items()}

    def _save_registry(self) -> None:
        data = {
            "holders": {cid: sorted(nodes) for cid, nodes in sorted(self._holders.items())},
            "sizes": dict(sorted(self._sizes.items())),
        }
        tmp = self._registry_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, indent=2))
        tmp.replace(self._registry_path)

    def _path_for(self, cid: ContentId) -> Path:
        return self._blob_dir / cid.hex

    def put(self, blob: bytes) -> ContentId:
        """Store bytes under their content id; idempotent for identical bytes."""
        cid = ContentId.of(blob)
        path = self._path_for(cid)
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(blob)
            tmp.replace(path)
        if cid.hex not in self._sizes:
            self._sizes[cid.hex] = len(blob)
            self._save_registry()
        return cid

    def get(self, cid: ContentId) -> bytes:
        """Return the stored bytes, verified to re-hash to the id before return."""
        path = self._path_for(cid)
        if not path.exists():
            raise NotFound(cid.hex)
        blob = path.read_bytes()
        if ContentId.of(blob) != cid:
            raise IntegrityMismatch(cid.hex)
        return blob

    def has(self, cid: ContentId) -> bool:
        return self._path_for(cid).exists()

    def announce(self, cid: ContentId, node: str) -> None:
        """Record that a node holds the blob; additive and idempotent."""
        holders = self._holders.setdefault(cid.hex, set())
        if node not in holders:
            holders.add(node)
            self._save_registry()

    def resolve(self, cid: ContentId) -> DhtRecord:
        """Inline bytes for small blobs, otherwise the announced holder set."""
        size = self._sizes.get(cid.hex)
        if size is not None and size <= self.inline_threshold:
            return DhtRecord(cid=cid, inline=self.get(cid))
        holders = self._holders.get(cid.hex)
        if size is None and not holders:
            raise NotFound(cid.hex)
        return DhtRecord(cid=cid, holders=frozenset(holders or ()))

    def content_ids(self) -> list[ContentId]:
        return sorted(ContentId.from_hex(p.name) for p in self._blob_dir.iterdir()
                      if len(p.name) == 64)
