"""Content hashing.

SHA-256 is the project-wide 256-bit hash: content addresses, transaction
ids and block hashes all use it. Signing uses SHA-512 internally (see
``eddsa``), as its curve standard requires.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

DIGEST_SIZE = 32


@dataclass(frozen=True, order=True)
class Digest:
    """A 32-byte hash output; renders as 64 lowercase hex characters."""

    value: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != DIGEST_SIZE:
            raise ValueError("digest must be exactly 32 bytes")

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        return cls(bytes.fromhex(text))

    @property
    def hex(self) -> str:
        return self.value.hex()

    def __str__(self) -> str:
        return self.hex


ZERO_DIGEST = Digest(b"\x00" * DIGEST_SIZE)


def hash_digest(data: bytes) -> Digest:
    """Hash arbitrary bytes to a fixed 32-byte digest (deterministic)."""
    return Digest(hashlib.sha256(data).digest())
