"""Independent oracles for ledger behavior.

Everything here is re-derived from first principles so it shares no code
path with the implementation it checks: its own canonical encoder built
from the documented format (sorted keys, ``,``/``:`` separators, ASCII
escapes), and full-chain replays that recompute spent sets and ownership
from raw blocks on every call instead of keeping incremental state.
"""

from __future__ import annotations

import hashlib

from medledger.crypto import verify

_SHORT_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\b": "\\b",
    "\f": "\\f",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
}


def _encode_string(text: str) -> str:
    parts = ['"']
    for ch in text:
        if ch in _SHORT_ESCAPES:
            parts.append(_SHORT_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) > 0x7E:
            parts.append(f"\\u{ord(ch):04x}")
        else:
            parts.append(ch)
    parts.append('"')
    return "".join(parts)


def independent_canonical_encode(value) -> str:
    """Second encoder, written from the format description alone."""
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return _encode_string(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite number")
        return repr(value)
    if isinstance(value, dict):
        entries = (
            f"{_encode_string(key)}:{independent_canonical_encode(value[key])}"
            for key in sorted(value)
        )
        return "{" + ",".join(entries) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(independent_canonical_encode(v) for v in value) + "]"
    raise ValueError(f"unencodable value: {value!r}")


def independent_tx_id(body: dict) -> str:
    return hashlib.sha256(independent_canonical_encode(body).encode()).hexdigest()


def _is_hex(value, length: int) -> bool:
    if not isinstance(value, str) or len(value) != length:
        return False
    try:
        bytes.fromhex(value)
    except ValueError:
        return False
    return True


def oracle_validate_transaction(blocks, pending, tx) -> bool:
    """Brute-force validity: recompute all state from the full chain."""
    wire = tx.to_wire()
    kind = wire.get("kind")
    if kind not in ("CREATE", "TRANSFER"):
        return False
    inputs = wire.get("inputs") or []
    outputs = wire.get("outputs") or []
    if len(inputs) != 1 or len(outputs) != 1:
        return False
    for entry in inputs:
        if not _is_hex(entry.get("owner"), 64) or not _is_hex(entry.get("signature"), 128):
            return False
    for entry in outputs:
        if not _is_hex(entry.get("recipient"), 64):
            return False
    asset = wire.get("asset")
    if not isinstance(asset, dict):
        return False
    if kind == "CREATE":
        if set(asset) != {"data"} or not isinstance(asset["data"], dict):
            return False
        if any(entry.get("spends") is not None for entry in inputs):
            return False
    else:
        if set(asset) != {"id"} or not _is_hex(asset.get("id"), 64):
            return False
        if any(entry.get("spends") is None for entry in inputs):
            return False

    # claimed id must recompute through the independent encoder
    body = {key: wire[key] for key in wire if key != "id"}
    try:
        if independent_tx_id(body) != wire.get("id"):
            return False
    except ValueError:
        return False

    # every signature must verify over the body with signatures nulled
    unsigned = dict(body)
    unsigned["inputs"] = [
        {"owner": e["owner"], "signature": None, "spends": e.get("spends")}
        for e in inputs
    ]
    payload = independent_canonical_encode(unsigned).encode()
    for entry in inputs:
        if not verify(
            bytes.fromhex(entry["owner"]), payload, bytes.fromhex(entry["signature"])
        ):
            return False

    # full replay: spent set, live outputs, lineages, committed ids
    spent = set()
    live = {}
    created = set()
    committed_ids = set()
    for block in blocks:
        for committed in block.txs:
            cw = committed.to_wire()
            committed_ids.add(cw["id"])
            lineage = cw["id"] if cw["kind"] == "CREATE" else cw["asset"]["id"]
            if cw["kind"] == "CREATE":
                created.add(cw["id"])
            for entry in cw["inputs"]:
                if entry.get("spends"):
                    ref = (entry["spends"]["tx_id"], entry["spends"]["index"])
                    spent.add(ref)
                    live.pop(ref, None)
            for index, out in enumerate(cw["outputs"]):
                live[(cw["id"], index)] = (out["recipient"], lineage)

    if wire["id"] in committed_ids:
        return False

    pending_spent = set()
    for waiting in pending:
        if waiting.id == wire["id"]:
            continue
        for entry in waiting.to_wire()["inputs"]:
            if entry.get("spends"):
                pending_spent.add((entry["spends"]["tx_id"], entry["spends"]["index"]))

    if kind == "CREATE":
        return True

    asset_id = asset["id"]
    if asset_id not in created:
        return False
    for entry in inputs:
        ref = (entry["spends"]["tx_id"], entry["spends"]["index"])
        if ref in spent or ref in pending_spent or ref not in live:
            return False
        recipient, lineage = live[ref]
        if recipient != entry["owner"] or lineage != asset_id:
            return False
    return True


def oracle_utxo_from_replay(blocks) -> dict:
    """Ownership map recomputed from genesis: (tx_id, index) -> (owner, lineage)."""
    live = {}
    for block in blocks:
        for committed in block.txs:
            cw = committed.to_wire()
            lineage = cw["id"] if cw["kind"] == "CREATE" else cw["asset"]["id"]
            for entry in cw["inputs"]:
                if entry.get("spends"):
                    live.pop((entry["spends"]["tx_id"], entry["spends"]["index"]), None)
            for index, out in enumerate(cw["outputs"]):
                live[(cw["id"], index)] = (out["recipient"], lineage)
    return live
