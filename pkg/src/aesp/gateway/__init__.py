from .storage import FileStorage, InMemoryStorage, StorageAdapter
from .pipeline import (
    AuthorizeOutcome,
    AuthorizeStatus,
    Gateway,
    GatewayError,
    PolicyChangeResult,
    SovereigntyViolation,
    UnknownAgent,
)
from .server import create_app, serve

__all__ = [
    "FileStorage",
    "InMemoryStorage",
    "StorageAdapter",
    "AuthorizeOutcome",
    "AuthorizeStatus",
    "Gateway",
    "GatewayError",
    "PolicyChangeResult",
    "SovereigntyViolation",
    "UnknownAgent",
    "create_app",
    "serve",
]
