"""The authorize pipeline: policy gate -> human review -> contextual key
derivation and signing, plus gated policy changes.

Sovereignty invariant: nothing executes without either an approving
PolicyDecision or an approving ReviewResponse. The pipeline asserts
this on every executed outcome and keeps a tally so test suites can
assert it globally.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import TimeoutError as FutureTimeoutError
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

from ..constants import MICRO
from ..crypto import (
    Curve,
    DerivedKeypair,
    IdentityRoot,
    canonical_json,
    derive_contextual_keypair,
    sign,
)
from ..policy import (
    ActionRequest,
    ApprovalLevel,
    BudgetLedger,
    Policy,
    PolicyDecision,
    Verdict as PolicyVerdict,
    classify_change,
    evaluate,
)
from ..privacy import Direction, PrivacyLevel, derive_address
from ..review import (
    AgentFrozen,
    DeadlineExpired,
    ReviewManager,
    ReviewResponse,
    Tier,
    TierViolation,
    Urgency,
    Verdict as ReviewVerdict,
)
from .storage import StorageAdapter, InMemoryStorage


class GatewayError(Exception):
    pass


class UnknownAgent(GatewayError):
    code = "UNKNOWN_AGENT"


class SovereigntyViolation(GatewayError):
    """Raised if an execution path lacks both approvals — must never fire."""


class AuthorizeStatus(str, Enum):
    EXECUTED = "executed"
    REJECTED = "rejected"
    FROZEN = "frozen"
    EXPIRED = "expired"


@dataclass
class AuthorizeOutcome:
    status: AuthorizeStatus
    decision: Optional[PolicyDecision]
    review: Optional[ReviewResponse] = None
    signature: Optional[bytes] = None
    ephemeral_address: Optional[str] = None
    action: Optional[ActionRequest] = None

    def to_json_dict(self) -> dict:
        return {
            "status": self.status.value,
            "decision": (
                {
                    "verdict": self.decision.verdict.value,
                    "matched_policy_id": self.decision.matched_policy_id,
                    "failed_checks": self.decision.failed_checks,
                }
                if self.decision
                else None
            ),
            "review": (
                {
                    "request_id": self.review.request_id,
                    "verdict": self.review.verdict.value,
                    "responder": self.review.responder,
                    "biometric_confirmed": self.review.biometric_confirmed,
                }
                if self.review
                else None
            ),
            "signature": self.signature.hex() if self.signature else None,
            "ephemeral_address": self.ephemeral_address,
            "action": self.action.to_json_dict() if self.action else None,
        }


@dataclass
class PolicyChangeResult:
    accepted: bool
    required_approval: ApprovalLevel
    reason: str = ""
    changes: List[str] = field(default_factory=list)


@dataclass
class RegisteredAgent:
    agent_id: str
    policies: List[Policy]
    privacy_level: PrivacyLevel = PrivacyLevel.ISOLATED


class Gateway:
    """Composition of policy gate, review queue, ledger, and signing."""

    def __init__(
        self,
        root: IdentityRoot,
        storage: Optional[StorageAdapter] = None,
        ledger: Optional[BudgetLedger] = None,
    ):
        self.root = root
        self.storage = storage or InMemoryStorage()
        self.ledger = ledger or BudgetLedger()
        self.reviews = ReviewManager(self.storage)
        self.agents: Dict[str, RegisteredAgent] = {}
        self._agent_locks: Dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self.executed_outcomes: List[AuthorizeOutcome] = []

    # --- registry ---

    def register_agent(
        self,
        agent_id: str,
        policies: List[Policy],
        privacy_level: PrivacyLevel = PrivacyLevel.ISOLATED,
    ) -> RegisteredAgent:
        agent = RegisteredAgent(agent_id, list(policies), privacy_level)
        with self._registry_lock:
            self.agents[agent_id] = agent
            self._agent_locks.setdefault(agent_id, threading.Lock())
        return agent

    def _agent(self, agent_id: str) -> RegisteredAgent:
        agent = self.agents.get(agent_id)
        if agent is None:
            raise UnknownAgent(agent_id)
        return agent

    # --- authorize ---

    def authorize(
        self,
        action: ActionRequest,
        privacy_level: Optional[PrivacyLevel] = None,
        now: Optional[int] = None,
        *,
        review_timeout_s: Optional[float] = None,
        _reentry: bool = False,
    ) -> AuthorizeOutcome:
        """Gate the action; escalate to human review when it fails; sign
        and record on execution. A modify verdict re-runs the pipeline
        exactly once (the modified action is re-gated, never trusted)."""
        now = now if now is not None else int(time.time() * 1000)
        agent = self._agent(action.agent_id)
        level = privacy_level or agent.privacy_level

        if self.reviews.is_frozen(action.agent_id):
            return AuthorizeOutcome(AuthorizeStatus.FROZEN, None, action=action)

        lock = self._agent_locks[action.agent_id]
        with lock:
            decision = evaluate(action, agent.policies, self.ledger, now)
            if decision.verdict is PolicyVerdict.APPROVED:
                return self._execute(action, level, decision, None, now)

        # escalate outside the mutex; the human may take a while
        violations = [
            f"policy {pid}: checks {checks}"
            for pid, checks in decision.failed_checks.items()
        ]
        urgency = (
            Urgency.HIGH if action.amount >= 100 * MICRO else Urgency.NORMAL
        )
        try:
            request, future = self.reviews.submit(
                action, violations, urgency, Tier.REVIEW, now
            )
        except AgentFrozen:
            return AuthorizeOutcome(AuthorizeStatus.FROZEN, decision, action=action)

        try:
            response: ReviewResponse = future.result(timeout=review_timeout_s)
        except DeadlineExpired:
            return AuthorizeOutcome(AuthorizeStatus.EXPIRED, decision, action=action)
        except AgentFrozen:
            return AuthorizeOutcome(AuthorizeStatus.FROZEN, decision, action=action)
        except (TimeoutError, FutureTimeoutError):
            self.reviews.expire_sweep(request.deadline)
            return AuthorizeOutcome(AuthorizeStatus.EXPIRED, decision, action=action)

        if response.verdict is ReviewVerdict.REJECT:
            return AuthorizeOutcome(
                AuthorizeStatus.REJECTED, decision, review=response, action=action
            )
        if response.verdict is ReviewVerdict.MODIFY:
            if _reentry:
                return AuthorizeOutcome(
                    AuthorizeStatus.REJECTED, decision, review=response, action=action
                )
            modified = response.modified_action
            outcome = self.authorize(
                modified,
                level,
                now,
                review_timeout_s=review_timeout_s,
                _reentry=True,
            )
            outcome.review = outcome.review or response
            return outcome
        # approve
        with lock:
            return self._execute(action, level, decision, response, now)

    def _execute(
        self,
        action: ActionRequest,
        level: PrivacyLevel,
        decision: PolicyDecision,
        review: Optional[ReviewResponse],
        now: int,
    ) -> AuthorizeOutcome:
        gate_approved = decision.verdict is PolicyVerdict.APPROVED
        human_approved = (
            review is not None and review.verdict is ReviewVerdict.APPROVE
        )
        if not (gate_approved or human_approved):
            raise SovereigntyViolation(
                "execution attempted without policy or human approval"
            )
        address = derive_address(
            self.root,
            level,
            action.agent_id,
            Direction.OUTBOUND,
            action.chain,
            tx_id=action.id,
            seq=now,
        )
        signing_key = derive_contextual_keypair(
            self.root, Curve.ED25519, f"agent-auth:{action.agent_id}:"
        )
        payload = canonical_json(
            {
                "action": action.to_json_dict(),
                "decision_policy": decision.matched_policy_id,
                "review_request": review.request_id if review else None,
            }
        )
        signature = sign(signing_key, payload)
        self.ledger.record_spend(action.agent_id, action.amount, action.timestamp)
        policy_id = decision.matched_policy_id or next(
            iter(decision.failed_checks), None
        )
        if policy_id:
            self.ledger.mark_paid(action.agent_id, policy_id)
        outcome = AuthorizeOutcome(
            AuthorizeStatus.EXECUTED,
            decision,
            review=review,
            signature=signature,
            ephemeral_address=address,
            action=action,
        )
        self.executed_outcomes.append(outcome)
        return outcome

    # --- policy changes ---

    def apply_policy_change(
        self,
        old: Policy,
        new: Policy,
        human_response: Optional[ReviewResponse] = None,
    ) -> PolicyChangeResult:
        if old.id != new.id:
            raise ValueError("policies must share an id")
        report = classify_change(old, new)
        changes = [c.type.value for c in report.changes]
        level = report.required_approval

        def _apply() -> None:
            agent = self._agent(new.agent_id)
            agent.policies = [
                new if p.id == old.id else p for p in agent.policies
            ]

        if level is ApprovalLevel.NONE:
            _apply()
            return PolicyChangeResult(True, level, "no approval required", changes)
        if human_response is None or human_response.verdict is not ReviewVerdict.APPROVE:
            return PolicyChangeResult(
                False, level, "approval required but not granted", changes
            )
        if level is ApprovalLevel.BIOMETRIC and not human_response.biometric_confirmed:
            return PolicyChangeResult(
                False, level, "biometric confirmation required", changes
            )
        _apply()
        return PolicyChangeResult(True, level, "approved", changes)

    # --- console helpers ---

    def budget_summary(self, agent_id: str, now: Optional[int] = None) -> dict:
        agent = self._agent(agent_id)
        now = now if now is not None else int(time.time() * 1000)
        totals = self.ledger.rolling_totals(agent_id, now)
        limits = {}
        for policy in agent.policies:
            conditions = policy.conditions
            limits[policy.id] = {
                "day": conditions.max_amount_per_day,
                "week": conditions.max_amount_per_week,
                "month": conditions.max_amount_per_month,
            }
        return {"agent_id": agent_id, "totals": totals, "limits": limits}

    def agent_summaries(self, now: Optional[int] = None) -> List[dict]:
        now = now if now is not None else int(time.time() * 1000)
        out = []
        for agent_id in sorted(self.agents):
            summary = self.budget_summary(agent_id, now)
            summary["frozen"] = self.reviews.is_frozen(agent_id)
            out.append(summary)
        return out
