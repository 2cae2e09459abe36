"""Key wrapping for access grants.

Each account carries a key-agreement keypair, separate from its signing
pair. Wrapping seals a small payload (a record key, or a record envelope)
to a recipient: an ephemeral agreement key is generated, the shared secret
is hashed into a one-time AES key, and the payload is encrypted with an
embedded checksum so any corruption or a wrong private key is detected.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass

from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)

from .aescbc import Ciphertext, DecryptionError, SymmetricKey, aes_decrypt, aes_encrypt

AGREEMENT_KEY_SIZE = 32
_CHECKSUM_SIZE = 32


class UnwrapError(Exception):
    """Wrong private key or corrupted wrapped payload."""


@dataclass(frozen=True)
class AgreementKeyPair:
    """X25519 pair used only for key wrapping, never for signing."""

    private: bytes
    public: bytes

    @classmethod
    def generate(cls, private: bytes | None = None) -> "AgreementKeyPair":
        if private is None:
            private = secrets.token_bytes(AGREEMENT_KEY_SIZE)
        if len(private) != AGREEMENT_KEY_SIZE:
            raise ValueError("agreement private key must be 32 bytes")
        key = X25519PrivateKey.from_private_bytes(private)
        public = key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return cls(private=private, public=public)

    @property
    def public_hex(self) -> str:
        return self.public.hex()


def _shared_key(private: bytes, peer_public: bytes) -> SymmetricKey:
    secret = X25519PrivateKey.from_private_bytes(private).exchange(
        X25519PublicKey.from_public_bytes(peer_public)
    )
    return SymmetricKey(hashlib.sha256(b"medledger-wrap" + secret).digest())


@dataclass(frozen=True)
class WrappedKey:
    """Payload sealed to one recipient: ephemeral public key plus ciphertext."""

    ephemeral_public: bytes
    ciphertext: Ciphertext

    def to_bytes(self) -> bytes:
        return self.ephemeral_public + self.ciphertext.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "WrappedKey":
        if len(data) < AGREEMENT_KEY_SIZE + 32:
            raise ValueError("wrapped key too short")
        return cls(
            ephemeral_public=data[:AGREEMENT_KEY_SIZE],
            ciphertext=Ciphertext.from_bytes(data[AGREEMENT_KEY_SIZE:]),
        )

    @property
    def hex(self) -> str:
        return self.to_bytes().hex()


def wrap_bytes(payload: bytes, recipient_public: bytes) -> WrappedKey:
    """Seal arbitrary small payload bytes to the recipient's agreement key."""
    ephemeral = AgreementKeyPair.generate()
    key = _shared_key(ephemeral.private, recipient_public)
    checked = payload + hashlib.sha256(payload).digest()
    return WrappedKey(
        ephemeral_public=ephemeral.public,
        ciphertext=aes_encrypt(key, checked),
    )


def unwrap_bytes(wrapped: WrappedKey, recipient_private: bytes) -> bytes:
    """Recover the payload; raises UnwrapError unless the matching key is used."""
    key = _shared_key(recipient_private, wrapped.ephemeral_public)
    try:
        checked = aes_decrypt(key, wrapped.ciphertext)
    except DecryptionError as exc:
        raise UnwrapError("cannot unwrap payload") from exc
    if len(checked) < _CHECKSUM_SIZE:
        raise UnwrapError("cannot unwrap payload")
    payload, checksum = checked[:-_CHECKSUM_SIZE], checked[-_CHECKSUM_SIZE:]
    if hashlib.sha256(payload).digest() != checksum:
        raise UnwrapError("cannot unwrap payload")
    return payload


def wrap_key(record_key: SymmetricKey, recipient_public: bytes) -> WrappedKey:
    """Wrap a record key to a recipient; fresh ephemeral randomness each call."""
    return wrap_bytes(record_key.value, recipient_public)


def unwrap_key(wrapped: WrappedKey, recipient_private: bytes) -> SymmetricKey:
    payload = unwrap_bytes(wrapped, recipient_private)
    if len(payload) != 32:
        raise UnwrapError("wrapped payload is not a symmetric key")
    return SymmetricKey(payload)
