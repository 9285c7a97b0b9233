"""Eight-state negotiation FSM with bounded rounds/TTL, encrypted
transport-agnostic messaging, and agreement hashing.

Each party runs its own session replica: the initiator applies `offer`
when sending, the responder applies `offer_recv` when the first offer
arrives. Per-state timeouts are deliberately not implemented; only the
session TTL bounds lifetime.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Set

from .constants import MAX_NEGOTIATION_ROUNDS, NEGOTIATION_TTL_MS
from .crypto import (
    DerivedKeypair,
    EncryptedEnvelope,
    agree_and_encrypt,
    canonical_json,
    agree_and_decrypt,
    sha256,
)


class State(str, Enum):
    INITIAL = "initial"
    OFFER_SENT = "offer_sent"
    OFFER_RECEIVED = "offer_received"
    COUNTERING = "countering"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    COMMITTED = "committed"
    DISPUTED = "disputed"


class Kind(str, Enum):
    OFFER = "offer"
    OFFER_RECV = "offer_recv"
    COUNTER = "counter"
    ACCEPT = "accept"
    REJECT = "reject"
    COMMIT = "commit"
    DISPUTE = "dispute"


# The thirteen-tuple transition function.
TRANSITIONS: Dict[tuple, State] = {
    (State.INITIAL, Kind.OFFER): State.OFFER_SENT,
    (State.INITIAL, Kind.OFFER_RECV): State.OFFER_RECEIVED,
    (State.OFFER_SENT, Kind.COUNTER): State.COUNTERING,
    (State.OFFER_SENT, Kind.ACCEPT): State.ACCEPTED,
    (State.OFFER_SENT, Kind.REJECT): State.REJECTED,
    (State.OFFER_RECEIVED, Kind.COUNTER): State.COUNTERING,
    (State.OFFER_RECEIVED, Kind.ACCEPT): State.ACCEPTED,
    (State.OFFER_RECEIVED, Kind.REJECT): State.REJECTED,
    (State.COUNTERING, Kind.COUNTER): State.COUNTERING,
    (State.COUNTERING, Kind.ACCEPT): State.ACCEPTED,
    (State.COUNTERING, Kind.REJECT): State.REJECTED,
    (State.ACCEPTED, Kind.COMMIT): State.COMMITTED,
    (State.COMMITTED, Kind.DISPUTE): State.DISPUTED,
}

_ROUND_KINDS = {Kind.OFFER, Kind.OFFER_RECV, Kind.COUNTER}


class NegotiationError(Exception):
    pass


class InvalidTransition(NegotiationError):
    def __init__(self, state: State, kind: Kind):
        super().__init__(f"no transition from {state.value} on {kind.value}")
        self.state = state
        self.kind = kind


class SessionExpired(NegotiationError):
    pass


class RoundLimitExceeded(NegotiationError):
    pass


class ReplayDetected(NegotiationError):
    pass


@dataclass
class Round:
    type: Kind
    payload: object
    sender: str
    timestamp: int


@dataclass
class NegotiationSession:
    id: str
    initiator_agent: str
    responder_agent: str
    created_at: int
    state: State = State.INITIAL
    rounds: List[Round] = field(default_factory=list)
    round_count: int = 0
    max_rounds: int = MAX_NEGOTIATION_ROUNDS
    ttl_ms: int = NEGOTIATION_TTL_MS
    agreement_hash: Optional[bytes] = None
    seen_message_ids: Set[str] = field(default_factory=set)

    def is_expired(self, now: int) -> bool:
        return now >= self.created_at + self.ttl_ms


def compute_agreement_hash(session: NegotiationSession) -> bytes:
    """SHA-256 of the canonical JSON of the most recent offer/counter."""
    for rnd in reversed(session.rounds):
        if rnd.type in _ROUND_KINDS:
            return sha256(canonical_json(rnd.payload))
    raise NegotiationError("session has no offer/counter rounds")


def transition(
    session: NegotiationSession,
    kind: Kind,
    now: int,
    *,
    payload: object = None,
    sender: str = "",
) -> State:
    if session.is_expired(now):
        raise SessionExpired(f"session {session.id} expired")
    if kind in _ROUND_KINDS and session.round_count >= session.max_rounds:
        raise RoundLimitExceeded(
            f"round limit {session.max_rounds} reached"
        )
    target = TRANSITIONS.get((session.state, kind))
    if target is None:
        raise InvalidTransition(session.state, kind)
    if kind in _ROUND_KINDS:
        session.rounds.append(Round(kind, payload, sender, now))
        session.round_count += 1
    elif kind is Kind.REJECT and payload is not None:
        # a reject may carry an optional reason
        session.rounds.append(Round(kind, payload, sender, now))
    session.state = target
    if kind is Kind.ACCEPT:
        session.agreement_hash = compute_agreement_hash(session)
    return target


# --- encrypted messaging ---------------------------------------------------


class MessageType(str, Enum):
    OFFER = "negotiation_offer"
    COUNTER = "negotiation_counter"
    ACCEPT = "negotiation_accept"
    REJECT = "negotiation_reject"


_KIND_FOR_TYPE = {
    MessageType.OFFER: Kind.OFFER_RECV,  # receiver-side view
    MessageType.COUNTER: Kind.COUNTER,
    MessageType.ACCEPT: Kind.ACCEPT,
    MessageType.REJECT: Kind.REJECT,
}

_SEND_KIND = {
    MessageType.OFFER: Kind.OFFER,
    MessageType.COUNTER: Kind.COUNTER,
    MessageType.ACCEPT: Kind.ACCEPT,
    MessageType.REJECT: Kind.REJECT,
}


@dataclass
class NegotiationMessage:
    type: MessageType
    session_id: str
    payload: object
    sender_agent: str
    message_id: str
    timestamp: int

    def to_dict(self) -> dict:
        return {
            "type": self.type.value,
            "session_id": self.session_id,
            "payload": self.payload,
            "sender_agent": self.sender_agent,
            "message_id": self.message_id,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NegotiationMessage":
        return cls(
            type=MessageType(data["type"]),
            session_id=data["session_id"],
            payload=data["payload"],
            sender_agent=data["sender_agent"],
            message_id=data["message_id"],
            timestamp=data["timestamp"],
        )


class MessageSender:
    """Pluggable transport: deliver an encrypted envelope to a peer."""

    def send(self, recipient_agent: str, envelope: EncryptedEnvelope) -> None:
        raise NotImplementedError


class InMemoryTransport(MessageSender):
    def __init__(self):
        self.handlers: Dict[str, Callable[[EncryptedEnvelope], None]] = {}

    def register(self, agent_id: str, handler) -> None:
        self.handlers[agent_id] = handler

    def send(self, recipient_agent: str, envelope: EncryptedEnvelope) -> None:
        handler = self.handlers.get(recipient_agent)
        if handler is None:
            raise NegotiationError(f"no transport handler for {recipient_agent}")
        handler(envelope)


class NegotiationProtocol:
    """One party's negotiation endpoint: holds its session replicas and
    x25519 keys, encrypts outbound messages, and drives local transitions
    on receipt."""

    def __init__(
        self,
        agent_id: str,
        keypair: DerivedKeypair,
        transport: MessageSender,
        peer_public_keys: Optional[Dict[str, bytes]] = None,
    ):
        self.agent_id = agent_id
        self.keypair = keypair
        self.transport = transport
        self.peer_public_keys: Dict[str, bytes] = dict(peer_public_keys or {})
        self.sessions: Dict[str, NegotiationSession] = {}
        self._lock = threading.Lock()

    def open_session(
        self, session_id: str, initiator: str, responder: str, now: int, **kwargs
    ) -> NegotiationSession:
        session = NegotiationSession(
            id=session_id,
            initiator_agent=initiator,
            responder_agent=responder,
            created_at=now,
            **kwargs,
        )
        self.sessions[session_id] = session
        return session

    def send_message(
        self,
        session: NegotiationSession,
        msg_type: MessageType,
        payload: object,
        now: int,
    ) -> NegotiationMessage:
        recipient = (
            session.responder_agent
            if self.agent_id == session.initiator_agent
            else session.initiator_agent
        )
        peer_pk = self.peer_public_keys[recipient]
        message = NegotiationMessage(
            type=msg_type,
            session_id=session.id,
            payload=payload,
            sender_agent=self.agent_id,
            message_id=str(uuid.uuid4()),
            timestamp=now,
        )
        with self._lock:
            transition(
                session,
                _SEND_KIND[msg_type],
                now,
                payload=payload,
                sender=self.agent_id,
            )
        envelope = agree_and_encrypt(
            self.keypair, peer_pk, canonical_json(message.to_dict()), now_ms=now
        )
        self.transport.send(recipient, envelope)
        return message

    def receive_message(self, envelope: EncryptedEnvelope) -> NegotiationMessage:
        import json

        # try all known peers until one decrypts
        plaintext = None
        for peer_pk in self.peer_public_keys.values():
            try:
                plaintext = agree_and_decrypt(self.keypair, peer_pk, envelope)
                break
            except Exception:
                continue
        if plaintext is None:
            raise NegotiationError("decrypt failure: unknown sender")
        message = NegotiationMessage.from_dict(json.loads(plaintext))
        session = self.sessions.get(message.session_id)
        if session is None:
            raise NegotiationError(f"unknown session {message.session_id}")
        with self._lock:
            if message.message_id in session.seen_message_ids:
                raise ReplayDetected(f"duplicate message {message.message_id}")
            session.seen_message_ids.add(message.message_id)
            transition(
                session,
                _KIND_FOR_TYPE[message.type],
                message.timestamp,
                payload=message.payload,
                sender=message.sender_agent,
            )
        return message
