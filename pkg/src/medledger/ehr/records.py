"""Record and grant views as the application layer exposes them.

Summaries never carry keys, content ids or plaintext; those live only in
the encrypted envelopes on-chain and in callers' unlocked key material.
"""

from __future__ import annotations

from dataclasses import dataclass

HISTORY = "HISTORY"
LAB = "LAB"
RADIOLOGY = "RADIOLOGY"
VITALS = "VITALS"
PRESCRIPTION = "PRESCRIPTION"

RECORD_KINDS = (HISTORY, LAB, RADIOLOGY, VITALS, PRESCRIPTION)

ACTIVE = "ACTIVE"
REVOKED = "REVOKED"


@dataclass(frozen=True)
class HealthRecord:
    record_id: str
    owner_email: str
    owner_public: str
    kind: str
    generation: int
    created_height: int

    def to_doc(self) -> dict:
        return {
            "record_id": self.record_id,
            "owner_email": self.owner_email,
            "owner_public": self.owner_public,
            "kind": self.kind,
            "generation": self.generation,
            "created_height": self.created_height,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "HealthRecord":
        return cls(**doc)


@dataclass(frozen=True)
class AccessGrant:
    grant_id: str
    record_id: str
    grantee_email: str
    status: str
    grant_tx_id: str
    revoke_tx_id: str | None = None

    def to_doc(self) -> dict:
        return {
            "grant_id": self.grant_id,
            "record_id": self.record_id,
            "grantee_email": self.grantee_email,
            "status": self.status,
            "grant_tx_id": self.grant_tx_id,
            "revoke_tx_id": self.revoke_tx_id,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "AccessGrant":
        return cls(**doc)


@dataclass(frozen=True)
class VitalsReading:
    measure: str
    value: float
    unit: str
    timestamp: int

    def validate(self) -> None:
        if not self.measure or not isinstance(self.measure, str):
            raise ValueError("measure name is required")
        if not isinstance(self.value, (int, float)) or self.value != self.value:
            raise ValueError("value must be a finite number")
        if self.value in (float("inf"), float("-inf")):
            raise ValueError("value must be a finite number")
        if not self.unit or not isinstance(self.unit, str):
            raise ValueError("unit is required")
        if not isinstance(self.timestamp, int):
            raise ValueError("timestamp must be an integer")

    def to_doc(self) -> dict:
        return {
            "measure": self.measure,
            "value": self.value,
            "unit": self.unit,
            "timestamp": self.timestamp,
        }
