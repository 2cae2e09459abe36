"""Cryptographic primitives: hashing, signatures, record encryption, key wrapping."""

from .aescbc import (
    Ciphertext,
    DecryptionError,
    SymmetricKey,
    aes_decrypt,
    aes_encrypt,
)
from .eddsa import (
    GROUP_ORDER,
    Signature,
    SigningKeyPair,
    generate_signing_keypair,
    sign,
    verify,
)
from .hashing import DIGEST_SIZE, Digest, ZERO_DIGEST, hash_digest
from .keys import (
    KeyBundle,
    KeyFileError,
    load_key_file,
    rotate_keys,
    save_key_file,
)
from .wrap import (
    AgreementKeyPair,
    UnwrapError,
    WrappedKey,
    unwrap_bytes,
    unwrap_key,
    wrap_bytes,
    wrap_key,
)

__all__ = [
    "AgreementKeyPair",
    "Ciphertext",
    "DIGEST_SIZE",
    "DecryptionError",
    "Digest",
    "GROUP_ORDER",
    "KeyBundle",
    "KeyFileError",
    "Signature",
    "SigningKeyPair",
    "SymmetricKey",
    "UnwrapError",
    "WrappedKey",
    "ZERO_DIGEST",
    "aes_decrypt",
    "aes_encrypt",
    "generate_signing_keypair",
    "hash_digest",
    "load_key_file",
    "rotate_keys",
    "save_key_file",
    "sign",
    "unwrap_bytes",
    "unwrap_key",
    "verify",
    "wrap_bytes",
    "wrap_key",
]
