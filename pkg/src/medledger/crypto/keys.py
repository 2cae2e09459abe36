"""Account key bundles, rotation, and encrypted-at-rest key files.

A bundle holds one signing pair and one agreement pair under a generation
counter. Rotation replaces both pairs and bumps the generation by one; old
public keys stay valid for verifying historical signatures, and the caller
is responsible for publishing the new public keys on-chain.

Key files store the 32-byte secrets encrypted under a passphrase-derived
key (PBKDF2-SHA256), standing in for an HSM behind the same interface.
"""

from __future__ import annotations

import hashlib
import json
import secrets
from dataclasses import dataclass
from pathlib import Path

from .aescbc import Ciphertext, DecryptionError, SymmetricKey, aes_decrypt, aes_encrypt
from .eddsa import SEED_SIZE, SigningKeyPair, generate_signing_keypair
from .wrap import AgreementKeyPair

DEFAULT_KDF_ITERATIONS = 200_000


class KeyFileError(Exception):
    """Wrong passphrase or corrupted key file."""


@dataclass(frozen=True)
class KeyBundle:
    signing: SigningKeyPair
    agreement: AgreementKeyPair
    generation: int = 1

    @classmethod
    def generate(
        cls,
        signing_seed: bytes | None = None,
        agreement_private: bytes | None = None,
        generation: int = 1,
    ) -> "KeyBundle":
        seed = signing_seed if signing_seed is not None else secrets.token_bytes(SEED_SIZE)
        return cls(
            signing=generate_signing_keypair(seed),
            agreement=AgreementKeyPair.generate(agreement_private),
            generation=generation,
        )

    @property
    def public_keys(self) -> dict[str, str]:
        return {
            "signing": self.signing.public_hex,
            "agreement": self.agreement.public_hex,
            "generation": str(self.generation),
        }


def rotate_keys(bundle: KeyBundle) -> KeyBundle:
    """Fresh signing and agreement pairs at generation + 1."""
    return KeyBundle.generate(generation=bundle.generation + 1)


def _derive_file_key(passphrase: str, salt: bytes, iterations: int) -> SymmetricKey:
    raw = hashlib.pbkdf2_hmac("sha256", passphrase.encode(), salt, iterations, 32)
    return SymmetricKey(raw)


def save_key_file(
    path: str | Path,
    bundle: KeyBundle,
    passphrase: str,
    iterations: int = DEFAULT_KDF_ITERATIONS,
) -> None:
    """Write the bundle's secrets encrypted under the passphrase."""
    salt = secrets.token_bytes(16)
    key = _derive_file_key(passphrase, salt, iterations)
    payload = json.dumps(
        {
            "signing_seed": bundle.signing.seed.hex(),
            "agreement_private": bundle.agreement.private.hex(),
            "generation": bundle.generation,
        },
        sort_keys=True,
    ).encode()
    sealed = aes_encrypt(key, payload + hashlib.sha256(payload).digest())
    document = {
        "kdf": {"name": "pbkdf2-sha256", "salt": salt.hex(), "iterations": iterations},
        "sealed": sealed.to_bytes().hex(),
    }
    Path(path).write_text(json.dumps(document, indent=2, sort_keys=True))


def load_key_file(path: str | Path, passphrase: str) -> KeyBundle:
    """Load and decrypt a key file; raises KeyFileError on a wrong passphrase."""
    try:
        document = json.loads(Path(path).read_text())
        kdf = document["kdf"]
        salt = bytes.fromhex(kdf["salt"])
        iterations = int(kdf["iterations"])
        sealed = Ciphertext.from_bytes(bytes.fromhex(document["sealed"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise KeyFileError("malformed key file") from exc
    key = _derive_file_key(passphrase, salt, iterations)
    try:
        checked = aes_decrypt(key, sealed)
    except DecryptionError as exc:
        raise KeyFileError("wrong passphrase or corrupted key file") from exc
    payload, checksum = checked[:-32], checked[-32:]
    if hashlib.sha256(payload).digest() != checksum:
        raise KeyFileError("wrong passphrase or corrupted key file")
    fields = json.loads(payload)
    return KeyBundle.generate(
        signing_seed=bytes.fromhex(fields["signing_seed"]),
        agreement_private=bytes.fromhex(fields["agreement_private"]),
        generation=int(fields["generation"]),
    )
