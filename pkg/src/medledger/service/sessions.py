"""In-memory bearer sessions.

Unlocked key material lives only inside the process: sessions are lost on
restart by design, while accounts, records, chain data and grants persist.
Expiry is enforced on every request.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass

from ..crypto import KeyBundle

DEFAULT_TTL_SECONDS = 3600


class SessionError(Exception):
    pass


@dataclass
class Session:
    token: str
    email: str
    bundle: KeyBundle
    expires_at: float


class SessionStore:
    def __init__(self, ttl_seconds: int = DEFAULT_TTL_SECONDS):
        self.ttl_seconds = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, email: str, bundle: KeyBundle) -> Session:
        token = secrets.token_hex(16)
        session = Session(
            token=token,
            email=email,
            bundle=bundle,
            expires_at=time.time() + self.ttl_seconds,
        )
        with self._lock:
            self._sessions[token] = session
        return session

    def resolve(self, token: str | None) -> Session:
        if not token:
            raise SessionError("missing bearer token")
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                raise SessionError("unknown or expired session")
            if session.expires_at < time.time():
                del self._sessions[token]
                raise SessionError("unknown or expired session")
            return session

    def drop(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)
