"""Content-addressed blob store with a DHT-lite reference registry."""

from .blobstore import (
    INLINE_THRESHOLD,
    BlobStore,
    ContentId,
    DhtRecord,
    IntegrityMismatch,
    NotFound,
)

__all__ = [
    "INLINE_THRESHOLD",
    "BlobStore",
    "ContentId",
    "DhtRecord",
    "IntegrityMismatch",
    "NotFound",
]
