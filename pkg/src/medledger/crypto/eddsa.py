"""Deterministic Ed25519 signatures.

Key setup hashes a 32-byte seed with SHA-512: the lower half (clamped,
little-endian) becomes the secret scalar, the upper half the nonce prefix,
and the public key is the scalar multiple of the base point. Signing is
fully deterministic: the per-message nonce is a hash of prefix and message,
so the same (seed, message) always yields the same signature pair.

Points use extended homogeneous coordinates; fixed-window tables are cached
per point so repeated signing and verification stay fast enough for the
simulator workloads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

# Base field and curve constants (edwards25519)
P = 2**255 - 19
D = -121665 * pow(121666, P - 2, P) % P
GROUP_ORDER = 2**252 + 27742317777372353535851937790883648493

_IDENTITY = (0, 1, 1, 0)

SEED_SIZE = 32
PUBLIC_KEY_SIZE = 32
SIGNATURE_SIZE = 64


def _sha512(data: bytes) -> bytes:
    return hashlib.sha512(data).digest()


def _inv(x: int) -> int:
    return pow(x, P - 2, P)


def _point_add(a, b):
    ax, ay, az, at = a
    bx, by, bz, bt = b
    e = (ay - ax) * (by - bx) % P
    f = (ay + ax) * (by + bx) % P
    g = 2 * at * bt * D % P
    h = 2 * az * bz % P
    u, v, w, t = (f - e) % P, (h - g) % P, (h + g) % P, (f + e) % P
    return (u * v % P, w * t % P, v * w % P, u * t % P)


def _point_equal(a, b) -> bool:
    # cross-multiply to compare projective coordinates
    if (a[0] * b[2] - b[0] * a[2]) % P != 0:
        return False
    return (a[1] * b[2] - b[1] * a[2]) % P == 0


def _compress(pt) -> bytes:
    zinv = _inv(pt[2])
    x = pt[0] * zinv % P
    y = pt[1] * zinv % P
    return int.to_bytes(y | ((x & 1) << 255), 32, "little")


_SQRT_M1 = pow(2, (P - 1) // 4, P)


def _recover_x(y: int, sign: int):
    if y >= P:
        return None
    x2 = (y * y - 1) * _inv(D * y * y + 1) % P
    if x2 == 0:
        return None if sign else 0
    x = pow(x2, (P + 3) // 8, P)
    if (x * x - x2) % P != 0:
        x = x * _SQRT_M1 % P
    if (x * x - x2) % P != 0:
        return None
    if (x & 1) != sign:
        x = P - x
    return x


def _decompress(data: bytes):
    if len(data) != 32:
        return None
    y = int.from_bytes(data, "little")
    sign = y >> 255
    y &= (1 << 255) - 1
    x = _recover_x(y, sign)
    if x is None:
        return None
    return (x, y, 1, x * y % P)


# Base point: y = 4/5, x recovered with even sign
_BY = 4 * _inv(5) % P
_BX = _recover_x(_BY, 0)
BASE_POINT = (_BX, _BY, 1, _BX * _BY % P)


def _window_table(point):
    """Radix-16 fixed-window multiples: table[i][j] = (j * 16**i) * point."""
    table = []
    base = point
    for _ in range(64):
        row = [None] * 16
        acc = base
        for j in range(1, 16):
            row[j] = acc
            acc = _point_add(acc, base)
        table.append(row)
        base = acc
    return table


_BASE_TABLE = _window_table(BASE_POINT)


def _mul_with_table(table, scalar: int):
    q = _IDENTITY
    i = 0
    while scalar > 0:
        nibble = scalar & 15
        if nibble:
            q = _point_add(q, table[i][nibble])
        scalar >>= 4
        i += 1
    return q


def _mul_base(scalar: int):
    return _mul_with_table(_BASE_TABLE, scalar)


@lru_cache(maxsize=256)
def _cached_table(compressed: bytes):
    point = _decompress(compressed)
    if point is None:
        return None
    return _window_table(point)


def _clamp(raw: bytes) -> int:
    scalar = int.from_bytes(raw, "little")
    scalar &= (1 << 254) - 8
    scalar |= 1 << 254
    return scalar


@dataclass(frozen=True)
class Signature:
    """Signature pair: a compressed nonce point and a scalar below the group order."""

    r: bytes
    s: int

    def __post_init__(self) -> None:
        if len(self.r) != 32:
            raise ValueError("signature point must be 32 bytes")
        if not 0 <= self.s < 2**256:
            raise ValueError("signature scalar out of range")

    def to_bytes(self) -> bytes:
        return self.r + self.s.to_bytes(32, "little")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        if len(data) != SIGNATURE_SIZE:
            raise ValueError("signature must be 64 bytes")
        return cls(data[:32], int.from_bytes(data[32:], "little"))

    @property
    def hex(self) -> str:
        return self.to_bytes().hex()


@dataclass(frozen=True)
class SigningKeyPair:
    """Seed-derived signing key: clamped secret scalar, nonce prefix, public point."""

    seed: bytes
    scalar: int
    prefix: bytes
    public: bytes

    @property
    def public_hex(self) -> str:
        return self.public.hex()


def generate_signing_keypair(seed: bytes) -> SigningKeyPair:
    """Derive a signing keypair from a 32-byte seed (deterministic)."""
    if len(seed) != SEED_SIZE:
        raise ValueError("seed must be exactly 32 bytes")
    digest = _sha512(seed)
    scalar = _clamp(digest[:32])
    prefix = digest[32:]
    public = _compress(_mul_base(scalar))
    return SigningKeyPair(seed=seed, scalar=scalar, prefix=prefix, public=public)


def sign(key: SigningKeyPair, message: bytes) -> Signature:
    """Sign a message; deterministic, no per-signature randomness."""
    nonce = int.from_bytes(_sha512(key.prefix + message), "little") % GROUP_ORDER
    r_bytes = _compress(_mul_base(nonce))
    challenge = (
        int.from_bytes(_sha512(r_bytes + key.public + message), "little") % GROUP_ORDER
    )
    s = (nonce + challenge * key.scalar) % GROUP_ORDER
    return Signature(r=r_bytes, s=s)


def verify(public: bytes, message: bytes, sig: Signature | bytes) -> bool:
    """Check a signature; returns False on any malformed encoding, never raises."""
    if isinstance(sig, bytes):
        try:
            sig = Signature.from_bytes(sig)
        except (ValueError, TypeError):
            return False
    if not isinstance(public, bytes) or len(public) != PUBLIC_KEY_SIZE:
        return False
    if sig.s >= GROUP_ORDER:
        return False
    table = _cached_table(public)
    if table is None:
        return False
    r_point = _decompress(sig.r)
    if r_point is None:
        return False
    challenge = (
        int.from_bytes(_sha512(sig.r + public + message), "little") % GROUP_ORDER
    )
    lhs = _mul_base(sig.s)
    rhs = _point_add(r_point, _mul_with_table(table, challenge))
    return _point_equal(lhs, rhs)
