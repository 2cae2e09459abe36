"""Canonical map encoding for transaction and block hashing.

The canonical form of a map is JSON with keys sorted lexicographically,
no whitespace (separators ``,`` and ``:``), ASCII-escaped strings, and
non-finite numbers rejected. Two maps with the same entries encode to
identical bytes regardless of insertion order, so ids are stable across
processes and reproducible by foreign implementations.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

from ..crypto import Digest, hash_digest


def canonical_encode(body: Mapping[str, Any]) -> bytes:
    """Key-sorted, whitespace-free JSON bytes; rejects non-finite numbers."""
    try:
        text = json.dumps(
            body, sort_keys=True, separators=(",", ":"), ensure_ascii=True,
            allow_nan=False,
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"body is not canonically encodable: {exc}") from exc
    return text.encode("ascii")


def compute_tx_id(body: Mapping[str, Any]) -> Digest:
    """Content hash of a transaction body; the body must not carry an id field."""
    if "id" in body:
        raise ValueError("body must exclude the id field")
    return hash_digest(canonical_encode(body))
