"""Accounts: registration, OTP verification, key custody.

Registration stores a pending profile; keys exist only after the email
OTP check passes, at which point a fresh bundle is generated and written
to an encrypted key file under the account password. Three wrong codes
lock the pending registration until a new code is issued. On-chain
actions require a verified account.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from ..crypto import KeyBundle, load_key_file, save_key_file
from ..docstore import DocumentStore

PATIENT = "PATIENT"
DOCTOR = "DOCTOR"

PATIENT_FIELDS = (
    "first_name",
    "last_name",
    "email",
    "gender",
    "date_of_birth",
    "phone",
    "emergency_email",
)
DOCTOR_FIELDS = (
    "first_name",
    "last_name",
    "email",
    "phone",
    "hospital",
    "qualification",
    "specialization",
    "work_experience",
    "current_workplace",
)

OTP_ATTEMPT_LIMIT = 3


class AccountError(Exception):
    pass


class OtpSender(Protocol):
    def send(self, email: str, code: str) -> None: ...


class LoggingOtpSender:
    """Default delivery stub: codes are logged, never emailed."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def send(self, email: str, code: str) -> None:
        with self.path.open("a") as handle:
            handle.write(f"otp for {email}: {code}\n")


class CapturingOtpSender:
    """Test-mode sender keeping the last code per address in memory."""

    def __init__(self):
        self.codes: dict[str, str] = {}

    def send(self, email: str, code: str) -> None:
        self.codes[email] = code

    def last(self, email: str) -> str | None:
        return self.codes.get(email)


@dataclass(frozen=True)
class Account:
    role: str
    email: str
    profile: dict
    verified: bool
    signing_public: str | None = None
    agreement_public: str | None = None
    generation: int = 0

    def to_doc(self) -> dict:
        return {
            "role": self.role,
            "email": self.email,
            "profile": self.profile,
            "verified": self.verified,
            "signing_public": self.signing_public,
            "agreement_public": self.agreement_public,
            "generation": self.generation,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Account":
        return cls(**doc)


def _hash_password(password: str, salt: bytes, iterations: int) -> str:
    raw = hashlib.pbkdf2_hmac("sha256", password.encode(), salt, iterations)
    return raw.hex()


class AccountRegistry:
    def __init__(
        self,
        docstore: DocumentStore,
        keys_dir: str | Path,
        otp_sender: OtpSender,
        kdf_iterations: int = 50_000,
    ):
        self.docstore = docstore
        self.keys_dir = Path(keys_dir)
        self.keys_dir.mkdir(parents=True, exist_ok=True)
        self.otp_sender = otp_sender
        self.kdf_iterations = kdf_iterations

    # -- lookup --------------------------------------------------------------

    def get(self, email: str) -> Account | None:
        doc = self.docstore.get("accounts", email)
        return Account.from_doc(doc) if doc else None

    def require_verified(self, email: str) -> Account:
        account = self.get(email)
        if account is None:
            raise AccountError(f"unknown account: {email}")
        if not account.verified:
            raise AccountError(f"account not verified: {email}")
        return account

    def by_signing_key(self, public_hex: str) -> Account | None:
        doc = self.docstore.get("accounts_by_key", public_hex)
        return self.get(doc["email"]) if doc else None

    # -- registration --------------------------------------------------------

    def register(self, role: str, profile: dict, password: str) -> Account:
        if role not in (PATIENT, DOCTOR):
            raise AccountError(f"unknown role: {role}")
        email = profile.get("email", "").strip().lower()
        if not email or "@" not in email:
            raise AccountError("a valid email is required")
        required = PATIENT_FIELDS if role == PATIENT else DOCTOR_FIELDS
        missing = [f for f in required if f not in profile]
        if missing:
            raise AccountError(f"missing profile fields: {', '.join(missing)}")
        if self.docstore.get("accounts", email) is not None:
            raise AccountError(f"email already registered: {email}")
        if len(password) < 8:
            raise AccountError("password must be at least 8 characters")

        salt = secrets.token_bytes(16)
        self.docstore.put(
            "credentials",
            email,
            {
                "salt": salt.hex(),
                "iterations": self.kdf_iterations,
                "password_hash": _hash_password(password, salt, self.kdf_iterations),
            },
        )
        account = Account(
            role=role, email=email, profile=dict(profile, email=email), verified=False
        )
        self.docstore.put("accounts", email, account.to_doc())
        self._issue_otp(email)
        return account

    def _issue_otp(self, email: str) -> None:
        code = f"{secrets.randbelow(10**6):06d}"
        self.docstore.put(
            "otp",
            email,
            {"code_hash": hashlib.sha256(code.encode()).hexdigest(), "attempts": 0},
        )
        self.otp_sender.send(email, code)

    def regenerate_otp(self, email: str) -> None:
        account = self.get(email)
        if account is None:
            raise AccountError(f"unknown account: {email}")
        if account.verified:
            raise AccountError("account already verified")
        self._issue_otp(email)

    def verify_otp(self, email: str, code: str, password: str) -> Account:
        """Check the code and, on success, mint and store the account's keys."""
        account = self.get(email)
        if account is None:
            raise AccountError(f"unknown account: {email}")
        if account.verified:
            raise AccountError("account already verified")
        challenge = self.docstore.get("otp", email)
        if challenge is None:
            raise AccountError("no active code; request a new one")
        if challenge["attempts"] >= OTP_ATTEMPT_LIMIT:
            raise AccountError("too many attempts; request a new code")
        digest = hashlib.sha256(code.encode()).hexdigest()
        if not hmac.compare_digest(digest, challenge["code_hash"]):
            challenge["attempts"] += 1
            self.docstore.put("otp", email, challenge)
            if challenge["attempts"] >= OTP_ATTEMPT_LIMIT:
                raise AccountError("too many attempts; request a new code")
            raise AccountError("wrong code")
        self._check_password(email, password)

        bundle = KeyBundle.generate()
        save_key_file(
            self.key_path(email), bundle, password, iterations=self.kdf_iterations
        )
        verified = Account(
            role=account.role,
            email=email,
            profile=account.profile,
            verified=True,
            signing_public=bundle.signing.public_hex,
            agreement_public=bundle.agreement.public_hex,
            generation=bundle.generation,
        )
        self.docstore.put("accounts", email, verified.to_doc())
        self.docstore.put("accounts_by_key", bundle.signing.public_hex, {"email": email})
        self.docstore.delete("otp", email)
        return verified

    # -- credentials ---------------------------------------------------------

    def _check_password(self, email: str, password: str) -> None:
        credentials = self.docstore.get("credentials", email)
        if credentials is None:
            raise AccountError(f"unknown account: {email}")
        supplied = _hash_password(
            password, bytes.fromhex(credentials["salt"]), credentials["iterations"]
        )
        if not hmac.compare_digest(supplied, credentials["password_hash"]):
            raise AccountError("wrong password")

    def key_path(self, email: str) -> Path:
        return self.keys_dir / (hashlib.sha256(email.encode()).hexdigest() + ".key")

    def unlock(self, email: str, password: str) -> KeyBundle:
        """Authenticate and load the account's key bundle into memory."""
        account = self.require_verified(email)
        self._check_password(email, password)
        bundle = load_key_file(self.key_path(email), password)
        if bundle.signing.public_hex != account.signing_public:
            raise AccountError("key file does not match the registered keys")
        return bundle

    def all_accounts(self) -> list[Account]:
        return [Account.from_doc(doc) for _, doc in self.docstore.items("accounts")]
