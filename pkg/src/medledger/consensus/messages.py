"""Signed consensus messages and commit certificates.

Every message is signed over its canonical body (signature field nulled);
a commit certificate bundles a quorum of matching precommits and is only
as good as its signatures, which the checker re-verifies independently.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Any

from ..crypto import KeyBundle, hash_digest, sign, verify
from ..ledger import canonical_encode
from .config import quorum_size


@lru_cache(maxsize=8192)
def _verify_cached(sender: bytes, payload: bytes, signature: bytes) -> bool:
    # verification is pure; every node checks the same wires, so memoize
    return verify(sender, payload, signature)

PROPOSAL = "PROPOSAL"
PREVOTE = "PREVOTE"
PRECOMMIT = "PRECOMMIT"


def make_message(
    bundle: KeyBundle,
    kind: str,
    height: int,
    round_number: int,
    block_hash: str | None,
    block_wire: dict | None = None,
    prev_commit: dict | None = None,
) -> dict[str, Any]:
    body: dict[str, Any] = {
        "kind": kind,
        "height": height,
        "round": round_number,
        "block_hash": block_hash,
        "sender": bundle.signing.public_hex,
        "block": block_wire,
        "prev_commit": prev_commit,
        "signature": None,
    }
    signature = sign(bundle.signing, canonical_encode(body)).hex
    return dict(body, signature=signature)


def verify_message(wire: dict[str, Any]) -> bool:
    """Signature check against the embedded sender key; total on garbage."""
    try:
        body = dict(wire, signature=None)
        payload = canonical_encode(body)
        return _verify_cached(
            bytes.fromhex(wire["sender"]), payload, bytes.fromhex(wire["signature"])
        )
    except Exception:
        return False


def message_id(wire: dict[str, Any]) -> str:
    return hash_digest(canonical_encode(wire)).hex


def build_certificate(
    height: int, round_number: int, block_hash: str, precommit_wires: list[dict]
) -> dict[str, Any]:
    return {
        "height": height,
        "round": round_number,
        "block_hash": block_hash,
        "precommits": sorted(precommit_wires, key=lambda w: w["sender"]),
    }


def verify_certificate(
    certificate: dict[str, Any], validators: list[str], block_hash: str | None = None
) -> bool:
    """Quorum of distinct registered validators, all signing the same commit."""
    try:
        precommits = certificate["precommits"]
        height = certificate["height"]
        round_number = certificate["round"]
        certified_hash = certificate["block_hash"]
        if block_hash is not None and certified_hash != block_hash:
            return False
        senders = {w["sender"] for w in precommits}
        if len(senders) != len(precommits):
            return False
        if not senders.issubset(set(validators)):
            return False
        if len(senders) < quorum_size(len(validators)):
            return False
        for wire in precommits:
            if wire["kind"] != PRECOMMIT:
                return False
            if wire["height"] != height or wire["round"] != round_number:
                return False
            if wire["block_hash"] != certified_hash:
                return False
            if not verify_message(wire):
                return False
        return True
    except Exception:
        return False
