"""HTTP service: API endpoints, sessions, document-store persistence."""

from ..docstore import DocumentStore
from .app import create_app
from .sessions import Session, SessionError, SessionStore

__all__ = ["DocumentStore", "Session", "SessionError", "SessionStore", "create_app"]
