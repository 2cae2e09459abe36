"""Patient-centric application layer: accounts, records, grants, prescriptions."""

from .accounts import (
    Account,
    AccountError,
    AccountRegistry,
    CapturingOtpSender,
    DOCTOR,
    LoggingOtpSender,
    PATIENT,
)
from .audit import AuditLog
from .engine import Cluster, CommitError
from .records import (
    ACTIVE,
    AccessGrant,
    HISTORY,
    HealthRecord,
    LAB,
    PRESCRIPTION,
    RADIOLOGY,
    RECORD_KINDS,
    REVOKED,
    VITALS,
    VitalsReading,
)
from .system import AccessDenied, EhrError, HealthSystem

__all__ = [
    "ACTIVE",
    "AccessDenied",
    "AccessGrant",
    "Account",
    "AccountError",
    "AccountRegistry",
    "AuditLog",
    "CapturingOtpSender",
    "Cluster",
    "CommitError",
    "DOCTOR",
    "EhrError",
    "HISTORY",
    "HealthRecord",
    "HealthSystem",
    "LAB",
    "LoggingOtpSender",
    "PATIENT",
    "PRESCRIPTION",
    "RADIOLOGY",
    "RECORD_KINDS",
    "REVOKED",
    "VITALS",
    "VitalsReading",
]
