"""Patient-centric application facade.

Every record is AES-encrypted under its own fresh key; the ciphertext
lives in the replicated content store and the chain carries only sealed
envelopes (content id + record key, wrapped per recipient), so neither
administrators nor the persistence layer can reach plaintext. Grants add
an envelope for the doctor; revocation re-keys the record, re-encrypts,
and re-wraps to the remaining grantees, making the revoked wrapped key
useless against the live ciphertext. Grant and revoke transactions spend
the record's output back to the patient, so ownership never leaves the
patient while the lineage records the access history.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from ..crypto import (
    KeyBundle,
    SymmetricKey,
    UnwrapError,
    WrappedKey,
    aes_decrypt,
    aes_encrypt,
    unwrap_bytes,
    wrap_bytes,
)
from ..docstore import DocumentStore
from ..ledger import (
    BFT_MODE,
    Outpoint,
    build_create_tx,
    build_transfer_tx,
    canonical_encode,
    get_asset_history,
)
from ..store import ContentId
from .accounts import (
    Account,
    AccountRegistry,
    CapturingOtpSender,
    DOCTOR,
    LoggingOtpSender,
    OtpSender,
    PATIENT,
)
from .audit import AuditLog
from .engine import Cluster
from .records import (
    ACTIVE,
    AccessGrant,
    HealthRecord,
    PRESCRIPTION,
    RECORD_KINDS,
    REVOKED,
    VITALS,
    VitalsReading,
)


class EhrError(Exception):
    pass


class AccessDenied(EhrError):
    pass


class HealthSystem:
    """One deployment: accounts, replicated cluster, audit trail."""

    def __init__(
        self,
        data_dir: str | Path,
        n_nodes: int = 3,
        mode: str = BFT_MODE,
        seed: int = 0,
        block_time_ms: int = 200,
        pow_bits: int = 12,
        kdf_iterations: int = 50_000,
        otp_sender: OtpSender | None = None,
        vitals_batch: int = 1,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.docstore = DocumentStore(self.data_dir / "docstore")
        if otp_sender is None:
            otp_sender = LoggingOtpSender(self.data_dir / "otp.log")
        self.accounts = AccountRegistry(
            self.docstore,
            self.data_dir / "keys",
            otp_sender,
            kdf_iterations=kdf_iterations,
        )
        self.cluster = Cluster(
            self.data_dir / "cluster",
            n=n_nodes,
            mode=mode,
            seed=seed,
            block_time_ms=block_time_ms,
            pow_bits=pow_bits,
        )
        self.audit = AuditLog(self.data_dir / "audit.log")
        self.vitals_batch = vitals_batch
        self._vitals_buffer: dict[str, list[VitalsReading]] = {}
        self._write_lock = threading.RLock()

    # -- helpers ---------------------------------------------------------------

    def _require_bundle_owner(self, email: str, bundle: KeyBundle) -> Account:
        account = self.accounts.require_verified(email)
        if bundle.signing.public_hex != account.signing_public:
            raise AccessDenied("key bundle does not belong to this account")
        return account

    def _record(self, record_id: str) -> HealthRecord:
        doc = self.docstore.get("records", record_id)
        if doc is None:
            raise EhrError(f"unknown record: {record_id}")
        return HealthRecord.from_doc(doc)

    def _grant_key(self, record_id: str, grantee_email: str) -> str:
        return f"{record_id}:{grantee_email}"

    def _active_grant(self, record_id: str, grantee_email: str) -> AccessGrant | None:
        doc = self.docstore.get("grants", self._grant_key(record_id, grantee_email))
        if doc is None:
            return None
        grant = AccessGrant.from_doc(doc)
        return grant if grant.status == ACTIVE else None

    def _grants_for_record(self, record_id: str) -> list[AccessGrant]:
        return [
            AccessGrant.from_doc(doc)
            for key, doc in self.docstore.items("grants")
            if doc["record_id"] == record_id
        ]

    def _live_outpoint(self, record_id: str) -> Outpoint:
        state = self.cluster.state
        for ref, info in state.utxo.items():
            if info.asset_id == record_id:
                return ref
        raise EhrError(f"record {record_id} has no live output")

    def _current_envelopes(self, record_id: str) -> tuple[dict, int]:
        """Latest sealed (cid, key) envelopes and key generation from the chain."""
        history = get_asset_history(self.cluster.state, record_id)
        for tx in reversed(history):
            metadata = tx.metadata or {}
            if "envelopes" in metadata:
                return metadata["envelopes"], int(metadata.get("generation", 1))
        raise EhrError(f"record {record_id} carries no envelopes on-chain")

    def _open_envelope(self, envelopes: dict, bundle: KeyBundle) -> tuple[ContentId, SymmetricKey]:
        sealed_hex = envelopes.get(bundle.agreement.public_hex)
        if sealed_hex is None:
            raise AccessDenied("no envelope for this account's keys")
        payload = unwrap_bytes(
            WrappedKey.from_bytes(bytes.fromhex(sealed_hex)), bundle.agreement.private
        )
        fields = json.loads(payload)
        return ContentId.from_hex(fields["cid"]), SymmetricKey(bytes.fromhex(fields["key"]))

    def _seal_envelopes(
        self, cid: ContentId, key: SymmetricKey, recipients: list[str]
    ) -> dict[str, str]:
        payload = canonical_encode({"cid": cid.hex, "key": key.value.hex()})
        return {
            agreement_public: wrap_bytes(payload, bytes.fromhex(agreement_public)).hex
            for agreement_public in recipients
        }

    # -- registration passthrough ----------------------------------------------

    def register(self, role: str, profile: dict, password: str) -> Account:
        with self._write_lock:
            return self.accounts.register(role, profile, password)

    def verify_otp(self, email: str, code: str, password: str) -> Account:
        with self._write_lock:
            return self.accounts.verify_otp(email, code, password)

    def unlock(self, email: str, password: str) -> KeyBundle:
        return self.accounts.unlock(email, password)

    # -- records -----------------------------------------------------------------

    def add_record(
        self,
        patient_email: str,
        bundle: KeyBundle,
        plaintext: bytes,
        kind: str,
        extra_metadata: dict | None = None,
        owner_account: Account | None = None,
        author_bundle: KeyBundle | None = None,
    ) -> HealthRecord:
        """Encrypt, store off-chain, and commit a CREATE carrying sealed envelopes.

        ``owner_account``/``author_bundle`` support the prescription path,
        where a doctor authors a record the patient owns.
        """
        if kind not in RECORD_KINDS:
            raise EhrError(f"unknown record kind: {kind}")
        with self._write_lock:
            owner = owner_account or self._require_bundle_owner(patient_email, bundle)
            author = author_bundle or bundle

            record_key = SymmetricKey.generate()
            ciphertext = aes_encrypt(record_key, plaintext)
            cid = self.cluster.put_blob(ciphertext.to_bytes())

            recipients = [owner.agreement_public]
            if author_bundle is not None:
                recipients.append(author_bundle.agreement.public_hex)
            metadata = {
                "action": "create",
                "kind": kind,
                "generation": 1,
                "envelopes": self._seal_envelopes(cid, record_key, recipients),
            }
            if extra_metadata:
                metadata.update(extra_metadata)
            tx = build_create_tx(
                author,
                asset_data={"type": "health_record", "kind": kind},
                metadata=metadata,
                recipient=owner.signing_public,
            )
            height = self.cluster.submit_and_commit(tx)
            record = HealthRecord(
                record_id=tx.id,
                owner_email=owner.email,
                owner_public=owner.signing_public,
                kind=kind,
                generation=1,
                created_height=height,
            )
            self.docstore.put("records", record.record_id, record.to_doc())
            return record

    def ingest_vitals(
        self, patient_email: str, bundle: KeyBundle, reading: VitalsReading
    ) -> HealthRecord | None:
        """Buffer readings; a full batch flushes into one VITALS record."""
        reading.validate()
        with self._write_lock:
            self._require_bundle_owner(patient_email, bundle)
            buffer = self._vitals_buffer.setdefault(patient_email, [])
            buffer.append(reading)
            if len(buffer) < self.vitals_batch:
                return None
            readings = [entry.to_doc() for entry in buffer]
            buffer.clear()
            plaintext = json.dumps({"readings": readings}, sort_keys=True).encode()
            return self.add_record(patient_email, bundle, plaintext, VITALS)

    def fetch_record(self, caller_email: str, bundle: KeyBundle, record_id: str) -> bytes:
        """Unwrap the caller's envelope, fetch the ciphertext, decrypt.

        Every attempt lands in the audit log, success or not.
        """
        try:
            caller = self._require_bundle_owner(caller_email, bundle)
            record = self._record(record_id)
            allowed = record.owner_email == caller.email or (
                self._active_grant(record_id, caller.email) is not None
            )
            if not allowed:
                raise AccessDenied("caller is neither owner nor an active grantee")
            envelopes, _ = self._current_envelopes(record_id)
            cid, record_key = self._open_envelope(envelopes, bundle)
            blob = self.cluster.get_blob(cid)
            from ..crypto import Ciphertext

            plaintext = aes_decrypt(record_key, Ciphertext.from_bytes(blob))
        except AccessDenied:
            self.audit.append(caller_email, record_id, "fetch", "denied")
            raise
        except Exception:
            self.audit.append(caller_email, record_id, "fetch", "error")
            raise
        self.audit.append(caller_email, record_id, "fetch", "ok")
        return plaintext

    # -- grants ------------------------------------------------------------------

    def grant_access(
        self, patient_email: str, bundle: KeyBundle, doctor_email: str, record_id: str
    ) -> AccessGrant:
        with self._write_lock:
            patient = self._require_bundle_owner(patient_email, bundle)
            doctor = self.accounts.require_verified(doctor_email)
            record = self._record(record_id)
            if record.owner_email != patient.email:
                raise AccessDenied("only the record owner can grant access")
            if self._active_grant(record_id, doctor_email) is not None:
                raise EhrError("an active grant already exists for this doctor")

            envelopes, generation = self._current_envelopes(record_id)
            cid, record_key = self._open_envelope(envelopes, bundle)
            updated = dict(envelopes)
            updated.update(
                self._seal_envelopes(cid, record_key, [doctor.agreement_public])
            )
            tx = build_transfer_tx(
                bundle,
                record_id,
                self._live_outpoint(record_id),
                recipient=patient.signing_public,
                metadata={
                    "action": "grant",
                    "grantee": doctor.agreement_public,
                    "generation": generation,
                    "envelopes": updated,
                },
            )
            self.cluster.submit_and_commit(tx)
            grant = AccessGrant(
                grant_id=tx.id,
                record_id=record_id,
                grantee_email=doctor_email,
                status=ACTIVE,
                grant_tx_id=tx.id,
            )
            self.docstore.put(
                "grants", self._grant_key(record_id, doctor_email), grant.to_doc()
            )
            self.audit.append(patient_email, record_id, "grant", doctor_email)
            return grant

    def revoke_access(
        self, patient_email: str, bundle: KeyBundle, doctor_email: str, record_id: str
    ) -> AccessGrant:
        """Rekey on revoke: fresh key, re-encrypted content, new envelopes."""
        with self._write_lock:
            patient = self._require_bundle_owner(patient_email, bundle)
            record = self._record(record_id)
            if record.owner_email != patient.email:
                raise AccessDenied("only the record owner can revoke access")
            grant = self._active_grant(record_id, doctor_email)
            if grant is None:
                raise EhrError("no active grant for this doctor")

            envelopes, generation = self._current_envelopes(record_id)
            cid, record_key = self._open_envelope(envelopes, bundle)
            from ..crypto import Ciphertext

            plaintext = aes_decrypt(
                record_key, Ciphertext.from_bytes(self.cluster.get_blob(cid))
            )
            fresh_key = SymmetricKey.generate()
            fresh_cid = self.cluster.put_blob(aes_encrypt(fresh_key, plaintext).to_bytes())

            keep = [patient.agreement_public]
            for other in self._grants_for_record(record_id):
                if other.status == ACTIVE and other.grantee_email != doctor_email:
                    keep.append(
                        self.accounts.require_verified(other.grantee_email).agreement_public
                    )
            tx = build_transfer_tx(
                bundle,
                record_id,
                self._live_outpoint(record_id),
                recipient=patient.signing_public,
                metadata={
                    "action": "revoke",
                    "grantee": self.accounts.require_verified(doctor_email).agreement_public,
                    "generation": generation + 1,
                    "envelopes": self._seal_envelopes(fresh_cid, fresh_key, keep),
                },
            )
            self.cluster.submit_and_commit(tx)
            revoked = AccessGrant(
                grant_id=grant.grant_id,
                record_id=record_id,
                grantee_email=doctor_email,
                status=REVOKED,
                grant_tx_id=grant.grant_tx_id,
                revoke_tx_id=tx.id,
            )
            self.docstore.put(
                "grants", self._grant_key(record_id, doctor_email), revoked.to_doc()
            )
            updated = HealthRecord(
                record_id=record.record_id,
                owner_email=record.owner_email,
                owner_public=record.owner_public,
                kind=record.kind,
                generation=generation + 1,
                created_height=record.created_height,
            )
            self.docstore.put("records", record.record_id, updated.to_doc())
            self.audit.append(patient_email, record_id, "revoke", doctor_email)
            return revoked

    # -- prescriptions -------------------------------------------------------------

    def add_prescription(
        self,
        doctor_email: str,
        bundle: KeyBundle,
        patient_email: str,
        views_on_report: str,
        special_care: str,
        allergies: str,
        medicine_suggestions: str,
    ) -> HealthRecord:
        """Doctor-authored, patient-owned record; the author keeps read access."""
        with self._write_lock:
            doctor = self._require_bundle_owner(doctor_email, bundle)
            if doctor.role != DOCTOR:
                raise AccessDenied("only doctors can prescribe")
            patient = self.accounts.require_verified(patient_email)
            has_grant = any(
                record.owner_email == patient_email
                and self._active_grant(record.record_id, doctor_email)
                for record in self._all_records()
            )
            if not has_grant:
                raise AccessDenied(
                    "prescribing requires an active grant on one of the patient's records"
                )
            content = json.dumps(
                {
                    "doctor": doctor_email,
                    "patient": patient_email,
                    "views_on_report": views_on_report,
                    "special_care": special_care,
                    "allergies": allergies,
                    "medicine_suggestions": medicine_suggestions,
                    "written_at": int(time.time() * 1000),
                },
                sort_keys=True,
            ).encode()
            record = self.add_record(
                patient_email,
                bundle,
                content,
                PRESCRIPTION,
                extra_metadata={"author": doctor.signing_public},
                owner_account=patient,
                author_bundle=bundle,
            )
            grant = AccessGrant(
                grant_id=record.record_id,
                record_id=record.record_id,
                grantee_email=doctor_email,
                status=ACTIVE,
                grant_tx_id=record.record_id,
            )
            self.docstore.put(
                "grants", self._grant_key(record.record_id, doctor_email), grant.to_doc()
            )
            self.audit.append(doctor_email, record.record_id, "prescribe", patient_email)
            return record

    # -- listings -------------------------------------------------------------------

    def _all_records(self) -> list[HealthRecord]:
        return [HealthRecord.from_doc(doc) for _, doc in self.docstore.items("records")]

    def list_records(self, caller_email: str) -> list[HealthRecord]:
        """Patients see what they own; doctors see what is actively granted."""
        account = self.accounts.require_verified(caller_email)
        records = self._all_records()
        if account.role == PATIENT:
            mine = [r for r in records if r.owner_email == caller_email]
        else:
            mine = [
                r
                for r in records
                if self._active_grant(r.record_id, caller_email) is not None
            ]
        ordered = {}
        state = self.cluster.state
        for block in state.blocks:
            for position, tx in enumerate(block.txs):
                ordered[tx.id] = (block.header.height, position)
        mine.sort(key=lambda r: ordered.get(r.record_id, (1 << 62, 0)))
        return mine

    def list_grants(self, caller_email: str) -> list[AccessGrant]:
        account = self.accounts.require_verified(caller_email)
        grants = [AccessGrant.from_doc(doc) for _, doc in self.docstore.items("grants")]
        if account.role == PATIENT:
            owned = {r.record_id for r in self._all_records() if r.owner_email == caller_email}
            return [g for g in grants if g.record_id in owned]
        return [g for g in grants if g.grantee_email == caller_email]

    # -- chain views ------------------------------------------------------------------

    def chain_summary(self) -> list[dict]:
        return [
            {
                "height": block.header.height,
                "hash": block.hash_hex,
                "prev_hash": block.header.prev_hash,
                "timestamp": block.header.timestamp,
                "tx_count": len(block.txs),
                "seal_type": block.header.seal.get("type"),
            }
            for block in self.cluster.state.blocks
        ]

    def chain_block(self, height: int) -> dict | None:
        state = self.cluster.state
        if 0 <= height < len(state.blocks):
            return state.blocks[height].to_wire()
        return None
