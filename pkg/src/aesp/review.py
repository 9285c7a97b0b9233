"""Human-in-the-loop review: priority queue with awaitable resolution,
escalation tiers, emergency freeze, and the six-event notification bus.

Expiry is driven by explicit expire_sweep calls with an injected clock —
no background threads, so behavior is deterministic under test. Freeze
state is read through the storage adapter, so it survives restarts.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import Future
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional

from .constants import REVIEW_DEADLINE_MS
from .crypto import canonical_json
from .policy import ActionRequest

FREEZE_KEY_PREFIX = "aesp:freeze:"
REVIEW_KEY_PREFIX = "aesp:review:"


class Urgency(str, Enum):
    LOW = "low"
    NORMAL = "normal"
    HIGH = "high"
    CRITICAL = "critical"


_URGENCY_ORDER = [Urgency.LOW, Urgency.NORMAL, Urgency.HIGH, Urgency.CRITICAL]


class Tier(str, Enum):
    REVIEW = "review"
    BIOMETRIC = "biometric"


class ReviewStatus(str, Enum):
    PENDING = "pending"
    APPROVED = "approved"
    REJECTED = "rejected"
    MODIFIED = "modified"
    EXPIRED = "expired"
    CANCELLED = "cancelled"


class EventType(str, Enum):
    REQUEST_CREATED = "request_created"
    REQUEST_APPROVED = "request_approved"
    REQUEST_REJECTED = "request_rejected"
    REQUEST_MODIFIED = "request_modified"
    REQUEST_EXPIRED = "request_expired"
    REQUEST_CANCELLED = "request_cancelled"


_STATUS_EVENT = {
    ReviewStatus.APPROVED: EventType.REQUEST_APPROVED,
    ReviewStatus.REJECTED: EventType.REQUEST_REJECTED,
    ReviewStatus.MODIFIED: EventType.REQUEST_MODIFIED,
    ReviewStatus.EXPIRED: EventType.REQUEST_EXPIRED,
    ReviewStatus.CANCELLED: EventType.REQUEST_CANCELLED,
}


class ReviewError(Exception):
    pass


class AgentFrozen(ReviewError):
    code = "AGENT_FROZEN"


class UnknownRequest(ReviewError):
    pass


class AlreadyResolved(ReviewError):
    pass


class PastDeadline(ReviewError):
    pass


class TierViolation(ReviewError):
    pass


class DeadlineExpired(ReviewError):
    pass


class Verdict(str, Enum):
    APPROVE = "approve"
    REJECT = "reject"
    MODIFY = "modify"


@dataclass
class ReviewResponse:
    request_id: str
    verdict: Verdict
    responder: str
    timestamp: int
    modified_action: Optional[ActionRequest] = None
    biometric_confirmed: bool = False

    def __post_init__(self):
        if self.verdict is Verdict.MODIFY and self.modified_action is None:
            raise ValueError("modify verdict requires a modified_action")


@dataclass
class ReviewRequest:
    id: str
    action: ActionRequest
    agent_id: str
    violation_reasons: List[str]
    urgency: Urgency
    created_at: int
    deadline: int
    required_tier: Tier
    status: ReviewStatus = ReviewStatus.PENDING
    response: Optional[ReviewResponse] = None

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "action": self.action.to_json_dict(),
            "agent_id": self.agent_id,
            "violation_reasons": list(self.violation_reasons),
            "urgency": self.urgency.value,
            "created_at": self.created_at,
            "deadline": self.deadline,
            "required_tier": self.required_tier.value,
            "status": self.status.value,
        }


@dataclass(frozen=True)
class ReviewEvent:
    type: EventType
    request_id: str
    timestamp: int
    payload: dict


class StorageAdapter:
    """get/set string store with read-your-writes."""

    def get(self, key: str) -> Optional[str]:
        raise NotImplementedError

    def set(self, key: str, value: str) -> None:
        raise NotImplementedError


class InMemoryStorage(StorageAdapter):
    def __init__(self):
        self._data: Dict[str, str] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[str]:
        with self._lock:
            return self._data.get(key)

    def set(self, key: str, value: str) -> None:
        with self._lock:
            self._data[key] = value


class ReviewManager:
    def __init__(self, storage: Optional[StorageAdapter] = None):
        self.storage = storage or InMemoryStorage()
        self._requests: Dict[str, ReviewRequest] = {}
        self._futures: Dict[str, Future] = {}
        self._listeners: List[Callable[[ReviewEvent], None]] = []
        self._lock = threading.RLock()
        self._seq = 0

    # --- events ---

    def subscribe(self, listener: Callable[[ReviewEvent], None]) -> Callable[[], None]:
        with self._lock:
            self._listeners.append(listener)

        def unsubscribe():
            with self._lock:
                if listener in self._listeners:
                    self._listeners.remove(listener)

        return unsubscribe

    def _emit(self, event_type: EventType, request: ReviewRequest, now: int) -> None:
        event = ReviewEvent(event_type, request.id, now, request.to_json_dict())
        for listener in list(self._listeners):
            listener(event)

    # --- freeze ---

    def freeze(self, agent_id: str, now: int = 0) -> None:
        self.storage.set(FREEZE_KEY_PREFIX + agent_id, json.dumps({"frozen": True}))
        with self._lock:
            pending = [
                r for r in self._requests.values()
                if r.agent_id == agent_id and r.status is ReviewStatus.PENDING
            ]
            for request in pending:
                self._resolve(
                    request,
                    ReviewStatus.CANCELLED,
                    now,
                    error=AgentFrozen(f"agent {agent_id} frozen"),
                )

    def unfreeze(self, agent_id: str) -> None:
        self.storage.set(FREEZE_KEY_PREFIX + agent_id, json.dumps({"frozen": False}))

    def is_frozen(self, agent_id: str) -> bool:
        raw = self.storage.get(FREEZE_KEY_PREFIX + agent_id)
        return bool(raw and json.loads(raw).get("frozen"))

    # --- queue ---

    def submit(
        self,
        action: ActionRequest,
        violation_reasons: List[str],
        urgency: Urgency,
        tier: Tier,
        now: int,
        deadline: Optional[int] = None,
    ) -> "tuple[ReviewRequest, Future]":
        """Enqueue and return (request, future). The future resolves with a
        ReviewResponse, or fails with DeadlineExpired / AgentFrozen."""
        if self.is_frozen(action.agent_id):
            raise AgentFrozen(f"agent {action.agent_id} is frozen")
        request = ReviewRequest(
            id=str(uuid.uuid4()),
            action=action,
            agent_id=action.agent_id,
            violation_reasons=list(violation_reasons),
            urgency=urgency,
            created_at=now,
            deadline=deadline if deadline is not None else now + REVIEW_DEADLINE_MS,
            required_tier=tier,
        )
        if request.deadline <= request.created_at:
            raise ValueError("deadline must be after creation time")
        future: Future = Future()
        with self._lock:
            self._seq += 1
            self._requests[request.id] = request
            self._futures[request.id] = future
            self._persist(request)
            self._emit(EventType.REQUEST_CREATED, request, now)
        return request, future

    def pending(self, agent_id: Optional[str] = None) -> List[ReviewRequest]:
        """Pending requests in dequeue order: urgency desc, FIFO within."""
        with self._lock:
            items = [
                r for r in self._requests.values()
                if r.status is ReviewStatus.PENDING
                and (agent_id is None or r.agent_id == agent_id)
            ]
        return sorted(
            items,
            key=lambda r: (-_URGENCY_ORDER.index(r.urgency), r.created_at),
        )

    def get(self, request_id: str) -> Optional[ReviewRequest]:
        return self._requests.get(request_id)

    def respond(self, request_id: str, response: ReviewResponse, now: int) -> None:
        with self._lock:
            request = self._requests.get(request_id)
            if request is None:
                raise UnknownRequest(request_id)
            if request.status is not ReviewStatus.PENDING:
                raise AlreadyResolved(f"request {request_id} is {request.status.value}")
            if now >= request.deadline:
                raise PastDeadline(f"request {request_id} deadline passed")
            if (
                request.required_tier is Tier.BIOMETRIC
                and response.verdict is Verdict.APPROVE
                and not response.biometric_confirmed
            ):
                raise TierViolation(
                    "biometric-tier approval requires biometric confirmation"
                )
            status = {
                Verdict.APPROVE: ReviewStatus.APPROVED,
                Verdict.REJECT: ReviewStatus.REJECTED,
                Verdict.MODIFY: ReviewStatus.MODIFIED,
            }[response.verdict]
            request.response = response
            self._resolve(request, status, now, result=response)

    def expire_sweep(self, now: int) -> int:
        with self._lock:
            expired = [
                r for r in self._requests.values()
                if r.status is ReviewStatus.PENDING and now >= r.deadline
            ]
            for request in expired:
                self._resolve(
                    request,
                    ReviewStatus.EXPIRED,
                    now,
                    error=DeadlineExpired(f"request {request.id} expired"),
                )
        return len(expired)

    def _resolve(
        self,
        request: ReviewRequest,
        status: ReviewStatus,
        now: int,
        *,
        result: Optional[ReviewResponse] = None,
        error: Optional[Exception] = None,
    ) -> None:
        request.status = status
        self._persist(request)
        future = self._futures.pop(request.id, None)
        if future is not None:
            if error is not None:
                future.set_exception(error)
            else:
                future.set_result(result)
        self._emit(_STATUS_EVENT[status], request, now)

    def _persist(self, request: ReviewRequest) -> None:
        self.storage.set(
            REVIEW_KEY_PREFIX + request.id,
            canonical_json(request.to_json_dict()).decode("utf-8"),
        )
