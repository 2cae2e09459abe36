"""Asset transactions: CREATE mints a new asset lineage, TRANSFER moves
ownership of previously-unspent outputs along that lineage.

Signatures cover the canonical body with every signature field nulled;
the transaction id is the hash of the canonical body with signatures in
place (and no id field). Builders produce fully signed transactions.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

from ..crypto import KeyBundle, sign
from .encoding import canonical_encode, compute_tx_id

CREATE = "CREATE"
TRANSFER = "TRANSFER"


@dataclass(frozen=True, order=True)
class Outpoint:
    """Reference to one output of an earlier transaction."""

    tx_id: str
    index: int

    def to_wire(self) -> dict[str, Any]:
        return {"tx_id": self.tx_id, "index": self.index}

    @classmethod
    def from_wire(cls, data: dict[str, Any]) -> "Outpoint":
        return cls(tx_id=data["tx_id"], index=int(data["index"]))


@dataclass(frozen=True)
class TxInput:
    """Spent output reference (absent for CREATE), owner key, and signature."""

    owner: str
    signature: str | None = None
    spends: Outpoint | None = None

    def to_wire(self) -> dict[str, Any]:
        return {
            "owner": self.owner,
            "signature": self.signature,
            "spends": self.spends.to_wire() if self.spends else None,
        }

    @classmethod
    def from_wire(cls, data: dict[str, Any]) -> "TxInput":
        spends = data.get("spends")
        return cls(
            owner=data["owner"],
            signature=data.get("signature"),
            spends=Outpoint.from_wire(spends) if spends else None,
        )


@dataclass(frozen=True)
class TxOutput:
    recipient: str

    def to_wire(self) -> dict[str, Any]:
        return {"recipient": self.recipient}

    @classmethod
    def from_wire(cls, data: dict[str, Any]) -> "TxOutput":
        return cls(recipient=data["recipient"])


@dataclass(frozen=True)
class Transaction:
    """CREATE or TRANSFER with signed inputs and owner outputs.

    ``id`` is the claimed id; validation recomputes it from the body.
    ``metadata=None`` omits the field from the canonical body, which is
    distinct from an explicit empty map.
    """

    kind: str
    asset: dict[str, Any]
    inputs: tuple[TxInput, ...]
    outputs: tuple[TxOutput, ...]
    id: str
    metadata: dict[str, Any] | None = None

    def body(self, with_signatures: bool = True) -> dict[str, Any]:
        entry = {
            "kind": self.kind,
            "asset": self.asset,
            "inputs": [
                {
                    "owner": i.owner,
                    "signature": i.signature if with_signatures else None,
                    "spends": i.spends.to_wire() if i.spends else None,
                }
                for i in self.inputs
            ],
            "outputs": [o.to_wire() for o in self.outputs],
        }
        if self.metadata is not None:
            entry["metadata"] = self.metadata
        return entry

    def signing_payload(self) -> bytes:
        return canonical_encode(self.body(with_signatures=False))

    def computed_id(self) -> str:
        return compute_tx_id(self.body()).hex

    @property
    def asset_id(self) -> str:
        """The asset lineage this transaction belongs to."""
        return self.id if self.kind == CREATE else self.asset["id"]

    def to_wire(self) -> dict[str, Any]:
        # deep copy so wire consumers can never mutate the transaction
        wire = copy.deepcopy(self.body())
        wire["id"] = self.id
        return wire

    @classmethod
    def from_wire(cls, data: dict[str, Any]) -> "Transaction":
        return cls(
            kind=data["kind"],
            asset=copy.deepcopy(data["asset"]),
            inputs=tuple(TxInput.from_wire(i) for i in data["inputs"]),
            outputs=tuple(TxOutput.from_wire(o) for o in data["outputs"]),
            metadata=copy.deepcopy(data.get("metadata")),
            id=data["id"],
        )


def _finish(
    kind: str,
    asset: dict[str, Any],
    metadata: dict[str, Any] | None,
    unsigned: list[TxInput],
    outputs: list[TxOutput],
    signers: list[KeyBundle],
) -> Transaction:
    draft = Transaction(
        kind=kind,
        asset=asset,
        metadata=metadata,
        inputs=tuple(unsigned),
        outputs=tuple(outputs),
        id="",
    )
    payload = draft.signing_payload()
    signed = tuple(
        TxInput(
            owner=inp.owner,
            signature=sign(bundle.signing, payload).hex,
            spends=inp.spends,
        )
        for inp, bundle in zip(unsigned, signers)
    )
    final = Transaction(
        kind=kind,
        asset=asset,
        metadata=metadata,
        inputs=signed,
        outputs=tuple(outputs),
        id="",
    )
    return Transaction(
        kind=kind,
        asset=asset,
        metadata=metadata,
        inputs=signed,
        outputs=tuple(outputs),
        id=final.computed_id(),
    )


def build_create_tx(
    owner: KeyBundle,
    asset_data: dict[str, Any],
    metadata: dict[str, Any] | None = None,
    recipient: str | None = None,
) -> Transaction:
    """Mint a new asset; the output goes to ``recipient`` (the owner by default)."""
    unsigned = [TxInput(owner=owner.signing.public_hex)]
    outputs = [TxOutput(recipient=recipient or owner.signing.public_hex)]
    return _finish(CREATE, {"data": asset_data}, metadata, unsigned, outputs, [owner])


def build_transfer_tx(
    owner: KeyBundle,
    asset_id: str,
    spends: Outpoint,
    recipient: str,
    metadata: dict[str, Any] | None = None,
) -> Transaction:
    """Spend one unspent output of an asset lineage to a new recipient."""
    unsigned = [TxInput(owner=owner.signing.public_hex, spends=spends)]
    outputs = [TxOutput(recipient=recipient)]
    return _finish(TRANSFER, {"id": asset_id}, metadata, unsigned, outputs, [owner])
