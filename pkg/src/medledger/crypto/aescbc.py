"""AES-256-CBC record encryption.

Records are encrypted under fresh random 256-bit keys with a random
16-byte IV per encryption and PKCS#7 padding. There is no authentication
tag on the ciphertext: integrity of stored records is anchored by their
on-chain content address, and decrypt failures surface as padding errors.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

KEY_SIZE = 32
BLOCK_SIZE = 16


class DecryptionError(Exception):
    """Wrong key or corrupted ciphertext; no plaintext is revealed."""


@dataclass(frozen=True)
class SymmetricKey:
    """A 32-byte AES-256 key, generated fresh per record and per rekey."""

    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != KEY_SIZE:
            raise ValueError("symmetric key must be exactly 32 bytes")

    @classmethod
    def generate(cls) -> "SymmetricKey":
        return cls(secrets.token_bytes(KEY_SIZE))


@dataclass(frozen=True)
class Ciphertext:
    """IV plus CBC body; body length is always a positive multiple of 16."""

    iv: bytes
    body: bytes

    def __post_init__(self) -> None:
        if len(self.iv) != BLOCK_SIZE:
            raise ValueError("IV must be 16 bytes")
        if len(self.body) == 0 or len(self.body) % BLOCK_SIZE != 0:
            raise ValueError("body must be a positive multiple of 16 bytes")

    def to_bytes(self) -> bytes:
        return self.iv + self.body

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ciphertext":
        if len(data) < 2 * BLOCK_SIZE:
            raise ValueError("ciphertext too short")
        return cls(iv=data[:BLOCK_SIZE], body=data[BLOCK_SIZE:])


def _pad(data: bytes) -> bytes:
    fill = BLOCK_SIZE - (len(data) % BLOCK_SIZE)
    return data + bytes([fill]) * fill


def _unpad(data: bytes) -> bytes:
    fill = data[-1]
    if not 1 <= fill <= BLOCK_SIZE or data[-fill:] != bytes([fill]) * fill:
        raise DecryptionError("bad padding")
    return data[:-fill]


def aes_encrypt(key: SymmetricKey, plaintext: bytes, iv: bytes | None = None) -> Ciphertext:
    """Encrypt any plaintext (empty allowed); fresh random IV unless given one."""
    if iv is None:
        iv = secrets.token_bytes(BLOCK_SIZE)
    encryptor = Cipher(algorithms.AES(key.value), modes.CBC(iv)).encryptor()
    body = encryptor.update(_pad(plaintext)) + encryptor.finalize()
    return Ciphertext(iv=iv, body=body)


def aes_decrypt(key: SymmetricKey, ciphertext: Ciphertext) -> bytes:
    """Invert aes_encrypt exactly; raises DecryptionError on wrong key or corruption."""
    decryptor = Cipher(algorithms.AES(key.value), modes.CBC(ciphertext.iv)).decryptor()
    padded = decryptor.update(ciphertext.body) + decryptor.finalize()
    return _unpad(padded)
