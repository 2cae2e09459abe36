"""HTTP+JSON API over the application layer.

Every state-changing request is executed with the session's unlocked key
bundle, so each resulting transaction is attributable to the requesting
account; the service itself holds no signing power beyond live sessions.
Errors come back as ``{"code", "message"}`` with conventional status
classes: 401 auth, 403 forbidden, 404 not found, 409 conflict, 400/422
validation.
"""

from __future__ import annotations

import base64
from pathlib import Path
from typing import Any

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..ehr import (
    AccessDenied,
    AccountError,
    CapturingOtpSender,
    EhrError,
    HealthSystem,
    VitalsReading,
)
from .sessions import Session, SessionError, SessionStore


class RegisterRequest(BaseModel):
    role: str
    profile: dict[str, Any]
    password: str


class VerifyOtpRequest(BaseModel):
    email: str
    code: str
    password: str


class LoginRequest(BaseModel):
    email: str
    password: str


class RecordCreateRequest(BaseModel):
    kind: str
    content_b64: str


class VitalsRequest(BaseModel):
    measure: str
    value: float
    unit: str
    timestamp: int


class GrantRequest(BaseModel):
    record_id: str
    doctor_email: str


class PrescriptionRequest(BaseModel):
    patient_email: str
    views_on_report: str
    special_care: str
    allergies: str
    medicine_suggestions: str


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _map_account_error(exc: AccountError) -> HTTPException:
    text = str(exc)
    if "already registered" in text or "already verified" in text:
        return _error(409, "conflict", text)
    if "wrong password" in text or "not verified" in text or "unknown account" in text:
        return _error(401, "auth", text)
    return _error(400, "validation", text)


def _map_ehr_error(exc: EhrError) -> HTTPException:
    text = str(exc)
    if isinstance(exc, AccessDenied):
        return _error(403, "forbidden", text)
    if "unknown record" in text:
        return _error(404, "not_found", text)
    if "already exists" in text:
        return _error(409, "conflict", text)
    return _error(400, "validation", text)


def create_app(
    system: HealthSystem,
    session_ttl: int = 3600,
    debug_otp: bool = False,
    portal_dist: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="medledger", version="0.1.0")
    sessions = SessionStore(ttl_seconds=session_ttl)
    app.state.system = system
    app.state.sessions = sessions

    def current_session(authorization: str | None = Header(default=None)) -> Session:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        try:
            return sessions.resolve(token)
        except SessionError as exc:
            raise _error(401, "auth", str(exc))

    @app.post("/register")
    def register(request: RegisterRequest):
        try:
            account = system.register(request.role, request.profile, request.password)
        except AccountError as exc:
            raise _map_account_error(exc)
        return {"email": account.email, "role": account.role, "verified": False}

    @app.post("/verify-otp")
    def verify_otp(request: VerifyOtpRequest):
        try:
            account = system.verify_otp(request.email, request.code, request.password)
        except AccountError as exc:
            raise _map_account_error(exc)
        return {
            "email": account.email,
            "verified": account.verified,
            "signing_public": account.signing_public,
            "agreement_public": account.agreement_public,
        }

    @app.post("/login")
    def login(request: LoginRequest):
        try:
            bundle = system.unlock(request.email, request.password)
        except AccountError as exc:
            raise _map_account_error(exc)
        except Exception:
            raise _error(401, "auth", "login failed")
        session = sessions.create(request.email, bundle)
        account = system.accounts.get(request.email)
        return {
            "token": session.token,
            "email": session.email,
            "role": account.role,
            "expires_at": session.expires_at,
        }

    @app.post("/logout")
    def logout(session: Session = Depends(current_session)):
        sessions.drop(session.token)
        return {"ok": True}

    @app.post("/records", status_code=201)
    def create_record(
        request: RecordCreateRequest, session: Session = Depends(current_session)
    ):
        try:
            content = base64.b64decode(request.content_b64, validate=True)
        except Exception:
            raise _error(400, "validation", "content_b64 is not valid base64")
        try:
            record = system.add_record(
                session.email, session.bundle, content, request.kind
            )
        except (EhrError, AccountError) as exc:
            raise _map_ehr_error(exc) if isinstance(exc, EhrError) else _map_account_error(exc)
        return record.to_doc()

    @app.post("/vitals", status_code=201)
    def ingest_vitals(
        request: VitalsRequest, session: Session = Depends(current_session)
    ):
        reading = VitalsReading(
            measure=request.measure,
            value=request.value,
            unit=request.unit,
            timestamp=request.timestamp,
        )
        try:
            record = system.ingest_vitals(session.email, session.bundle, reading)
        except ValueError as exc:
            raise _error(400, "validation", str(exc))
        except EhrError as exc:
            raise _map_ehr_error(exc)
        return {"buffered": record is None, "record": record.to_doc() if record else None}

    @app.get("/records")
    def list_records(session: Session = Depends(current_session)):
        try:
            records = system.list_records(session.email)
        except AccountError as exc:
            raise _map_account_error(exc)
        return {"records": [r.to_doc() for r in records]}

    @app.get("/records/{record_id}")
    def fetch_record(record_id: str, session: Session = Depends(current_session)):
        try:
            content = system.fetch_record(session.email, session.bundle, record_id)
            record = system._record(record_id)
        except EhrError as exc:
            raise _map_ehr_error(exc)
        return dict(record.to_doc(), content_b64=base64.b64encode(content).decode())

    @app.get("/grants")
    def list_grants(session: Session = Depends(current_session)):
        try:
            grants = system.list_grants(session.email)
        except AccountError as exc:
            raise _map_account_error(exc)
        return {"grants": [g.to_doc() for g in grants]}

    @app.post("/grants", status_code=201)
    def grant(request: GrantRequest, session: Session = Depends(current_session)):
        try:
            grant = system.grant_access(
                session.email, session.bundle, request.doctor_email, request.record_id
            )
        except (EhrError, AccountError) as exc:
            raise _map_ehr_error(exc) if isinstance(exc, EhrError) else _map_account_error(exc)
        return grant.to_doc()

    @app.delete("/grants/{grant_id}")
    def revoke(grant_id: str, session: Session = Depends(current_session)):
        target = None
        for _, doc in system.docstore.items("grants"):
            if doc["grant_id"] == grant_id:
                target = doc
                break
        if target is None:
            raise _error(404, "not_found", f"unknown grant: {grant_id}")
        try:
            grant = system.revoke_access(
                session.email,
                session.bundle,
                target["grantee_email"],
                target["record_id"],
            )
        except EhrError as exc:
            raise _map_ehr_error(exc)
        return grant.to_doc()

    @app.post("/prescriptions", status_code=201)
    def prescribe(
        request: PrescriptionRequest, session: Session = Depends(current_session)
    ):
        try:
            record = system.add_prescription(
                session.email,
                session.bundle,
                request.patient_email,
                views_on_report=request.views_on_report,
                special_care=request.special_care,
                allergies=request.allergies,
                medicine_suggestions=request.medicine_suggestions,
            )
        except (EhrError, AccountError) as exc:
            raise _map_ehr_error(exc) if isinstance(exc, EhrError) else _map_account_error(exc)
        return record.to_doc()

    @app.get("/chain/blocks")
    def chain_blocks():
        return {"blocks": system.chain_summary()}

    @app.get("/chain/blocks/{height}")
    def chain_block(height: int):
        block = system.chain_block(height)
        if block is None:
            raise _error(404, "not_found", f"no block at height {height}")
        return block

    if debug_otp and isinstance(system.accounts.otp_sender, CapturingOtpSender):

        @app.get("/debug/otp/{email}")
        def debug_otp_code(email: str):
            code = system.accounts.otp_sender.last(email)
            if code is None:
                raise _error(404, "not_found", f"no code issued for {email}")
            return {"email": email, "code": code}

    if portal_dist is not None and Path(portal_dist).exists():
        dist = Path(portal_dist)

        @app.get("/")
        def portal_index():
            return FileResponse(dist / "index.html")

        app.mount("/portal", StaticFiles(directory=dist, html=True), name="portal")

    return app
