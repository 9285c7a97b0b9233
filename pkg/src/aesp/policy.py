"""The deterministic eight-check policy gate with OR semantics across
policies, rolling/calendar budget tracking, and the critical-change
classifier.

Check identifiers (stable across versions, used in ablation reports):
  1 per-transaction amount   5 method allowlist
  2 time window              6 first-payment review
  3 address allowlist        7 minimum balance after
  4 chain allowlist          8 rolling/calendar budgets
"""

from __future__ import annotations

import datetime
import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

from .constants import DAY_MS, SCOPE_RANKS, WEEK_MS

CHECK_IDS = (1, 2, 3, 4, 5, 6, 7, 8)


class Scope(str, Enum):
    AUTO_PAYMENT = "auto_payment"
    NEGOTIATION = "negotiation"
    COMMITMENT = "commitment"
    FULL = "full"

    @property
    def rank(self) -> int:
        return SCOPE_RANKS[self.value]


@dataclass(frozen=True)
class TimeWindow:
    start: str  # "HH:MM"
    end: str

    def __post_init__(self):
        for value in (self.start, self.end):
            hh, mm = value.split(":")
            if not (0 <= int(hh) <= 23 and 0 <= int(mm) <= 59):
                raise ValueError(f"invalid HH:MM value: {value}")

    @staticmethod
    def _minutes(value: str) -> int:
        hh, mm = value.split(":")
        return int(hh) * 60 + int(mm)


@dataclass(frozen=True)
class PolicyConditions:
    max_amount_per_tx: Optional[int] = None  # micro-units; None = unlimited
    max_amount_per_day: Optional[int] = None
    max_amount_per_week: Optional[int] = None
    max_amount_per_month: Optional[int] = None
    allow_list_addresses: Tuple[str, ...] = ()
    allow_list_chains: Tuple[str, ...] = ()
    allow_list_methods: Tuple[str, ...] = ()
    time_window: Optional[TimeWindow] = None
    min_balance_after: int = 0  # 0 = disabled
    require_review_first_pay: bool = False

    def __post_init__(self):
        for cap in (
            self.max_amount_per_tx,
            self.max_amount_per_day,
            self.max_amount_per_week,
            self.max_amount_per_month,
        ):
            if cap is not None and cap < 0:
                raise ValueError("amount caps must be non-negative")
        if self.min_balance_after < 0:
            raise ValueError("min_balance_after must be non-negative")

    def to_json_dict(self) -> dict:
        return {
            "max_amount_per_tx": self.max_amount_per_tx,
            "max_amount_per_day": self.max_amount_per_day,
            "max_amount_per_week": self.max_amount_per_week,
            "max_amount_per_month": self.max_amount_per_month,
            "allow_list_addresses": list(self.allow_list_addresses),
            "allow_list_chains": list(self.allow_list_chains),
            "allow_list_methods": list(self.allow_list_methods),
            "time_window": (
                {"start": self.time_window.start, "end": self.time_window.end}
                if self.time_window
                else None
            ),
            "min_balance_after": self.min_balance_after,
            "require_review_first_pay": self.require_review_first_pay,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PolicyConditions":
        window = data.get("time_window")
        return cls(
            max_amount_per_tx=data.get("max_amount_per_tx"),
            max_amount_per_day=data.get("max_amount_per_day"),
            max_amount_per_week=data.get("max_amount_per_week"),
            max_amount_per_month=data.get("max_amount_per_month"),
            allow_list_addresses=tuple(data.get("allow_list_addresses", ())),
            allow_list_chains=tuple(data.get("allow_list_chains", ())),
            allow_list_methods=tuple(data.get("allow_list_methods", ())),
            time_window=TimeWindow(window["start"], window["end"]) if window else None,
            min_balance_after=data.get("min_balance_after", 0),
            require_review_first_pay=data.get("require_review_first_pay", False),
        )


@dataclass(frozen=True)
class Policy:
    id: str
    agent_id: str
    owner_xid: str
    scope: Scope
    conditions: PolicyConditions
    created_at: int
    expires_at: int

    def is_active(self, now: int) -> bool:
        return self.created_at <= now < self.expires_at

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "agent_id": self.agent_id,
            "owner_xid": self.owner_xid,
            "scope": self.scope.value,
            "conditions": self.conditions.to_json_dict(),
            "created_at": self.created_at,
            "expires_at": self.expires_at,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Policy":
        return cls(
            id=data["id"],
            agent_id=data["agent_id"],
            owner_xid=data["owner_xid"],
            scope=Scope(data["scope"]),
            conditions=PolicyConditions.from_json_dict(data["conditions"]),
            created_at=data["created_at"],
            expires_at=data["expires_at"],
        )


@dataclass(frozen=True)
class ActionRequest:
    id: str
    agent_id: str
    amount: int  # micro-units
    to: str
    chain: str
    method: str
    timestamp: int  # ms epoch
    current_balance: int

    def __post_init__(self):
        if self.amount < 0 or self.current_balance < 0:
            raise ValueError("amount and balance must be non-negative")

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "agent_id": self.agent_id,
            "amount": self.amount,
            "to": self.to,
            "chain": self.chain,
            "method": self.method,
            "timestamp": self.timestamp,
            "current_balance": self.current_balance,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ActionRequest":
        return cls(**{k: data[k] for k in (
            "id", "agent_id", "amount", "to", "chain", "method",
            "timestamp", "current_balance")})


class Verdict(str, Enum):
    APPROVED = "approved"
    REVIEW_REQUIRED = "review_required"


@dataclass(frozen=True)
class PolicyDecision:
    verdict: Verdict
    matched_policy_id: Optional[str]
    failed_checks: Dict[str, List[int]]  # policy id -> failing check ids


class BudgetLedger:
    """Append-only per-agent spend records plus first-payment markers.

    record_spend is serialized per ledger; evaluate-then-record for an
    approved action must be wrapped in the gateway's per-agent mutex.
    """

    def __init__(self):
        self._spends: Dict[str, List[Tuple[int, int]]] = {}  # agent -> [(ts, amount)]
        self._paid: Set[Tuple[str, str]] = set()  # (agent_id, policy_id)
        self._lock = threading.Lock()

    def record_spend(self, agent_id: str, amount: int, timestamp: int) -> None:
        if amount < 0:
            raise ValueError("spend amount must be non-negative")
        with self._lock:
            self._spends.setdefault(agent_id, []).append((timestamp, amount))

    def mark_paid(self, agent_id: str, policy_id: str) -> None:
        with self._lock:
            self._paid.add((agent_id, policy_id))

    def has_paid(self, agent_id: str, policy_id: str) -> bool:
        return (agent_id, policy_id) in self._paid

    def rolling_totals(self, agent_id: str, now: int) -> Dict[str, int]:
        """day/week: trailing windows (now-W, now]; month: UTC calendar month."""
        month_anchor = datetime.datetime.fromtimestamp(
            now / 1000, tz=datetime.timezone.utc
        )
        day = week = month = 0
        for ts, amount in self._spends.get(agent_id, ()):
            if ts > now:
                continue
            if now - DAY_MS < ts:
                day += amount
            if now - WEEK_MS < ts:
                week += amount
            record_time = datetime.datetime.fromtimestamp(
                ts / 1000, tz=datetime.timezone.utc
            )
            if (record_time.year, record_time.month) == (
                month_anchor.year,
                month_anchor.month,
            ):
                month += amount
        return {"day": day, "week": week, "month": month}


def is_within_time_window(
    t_ms: int, window: TimeWindow, tz_offset_minutes: int = 0
) -> bool:
    """Minute-of-day containment, boundaries inclusive; start > end wraps
    around midnight (t >= start OR t <= end)."""
    minute = ((t_ms // 60_000) + tz_offset_minutes) % (24 * 60)
    start = TimeWindow._minutes(window.start)
    end = TimeWindow._minutes(window.end)
    if start <= end:
        return start <= minute <= end
    return minute >= start or minute <= end


def run_checks(
    request: ActionRequest,
    policy: Policy,
    ledger: BudgetLedger,
    now: int,
    *,
    enabled_checks: Tuple[int, ...] = CHECK_IDS,
    tz_offset_minutes: int = 0,
) -> List[int]:
    """Failing check ids for one policy, evaluated in the fixed 1..8 order."""
    conditions = policy.conditions
    failed: List[int] = []

    if 1 in enabled_checks:
        cap = conditions.max_amount_per_tx
        if cap is not None and request.amount > cap:
            failed.append(1)
    if 2 in enabled_checks and conditions.time_window is not None:
        if not is_within_time_window(
            request.timestamp, conditions.time_window, tz_offset_minutes
        ):
            failed.append(2)
    if 3 in enabled_checks and conditions.allow_list_addresses:
        if request.to not in conditions.allow_list_addresses:
            failed.append(3)
    if 4 in enabled_checks and conditions.allow_list_chains:
        if request.chain not in conditions.allow_list_chains:
            failed.append(4)
    if 5 in enabled_checks and conditions.allow_list_methods:
        if request.method not in conditions.allow_list_methods:
            failed.append(5)
    if 6 in enabled_checks and conditions.require_review_first_pay:
        if not ledger.has_paid(request.agent_id, policy.id):
            failed.append(6)
    if 7 in enabled_checks and conditions.min_balance_after > 0:
        if request.current_balance - request.amount < conditions.min_balance_after:
            failed.append(7)
    if 8 in enabled_checks:
        totals = ledger.rolling_totals(request.agent_id, now)
        over = False
        if conditions.max_amount_per_day is not None:
            over |= totals["day"] + request.amount > conditions.max_amount_per_day
        if conditions.max_amount_per_week is not None:
            over |= totals["week"] + request.amount > conditions.max_amount_per_week
        if conditions.max_amount_per_month is not None:
            over |= totals["month"] + request.amount > conditions.max_amount_per_month
        if over:
            failed.append(8)
    return failed


def evaluate(
    request: ActionRequest,
    policies: List[Policy],
    ledger: BudgetLedger,
    now: int,
    *,
    enabled_checks: Tuple[int, ...] = CHECK_IDS,
    tz_offset_minutes: int = 0,
) -> PolicyDecision:
    """OR semantics: the first active policy passing all enabled checks
    approves; otherwise review_required with per-policy failed checks."""
    failed_by_policy: Dict[str, List[int]] = {}
    for policy in policies:
        if policy.agent_id != request.agent_id:
            raise ValueError("policy does not belong to the requesting agent")
        if not policy.is_active(now):
            continue
        failed = run_checks(
            request,
            policy,
            ledger,
            now,
            enabled_checks=enabled_checks,
            tz_offset_minutes=tz_offset_minutes,
        )
        failed_by_policy[policy.id] = failed
        if not failed:
            return PolicyDecision(Verdict.APPROVED, policy.id, failed_by_policy)
    return PolicyDecision(Verdict.REVIEW_REQUIRED, None, failed_by_policy)


# --- critical policy change classification --------------------------------


class ChangeType(str, Enum):
    BUDGET_INCREASE = "budget_increase"
    SCOPE_ESCALATION = "scope_escalation"
    ADDR_REMOVE_ALL = "addr_remove_all"
    ADDR_ADD = "addr_add"
    TIME_WINDOW_REMOVE = "time_window_remove"
    MIN_BALANCE_LOWER = "min_balance_lower"
    FIRST_PAY_DISABLE = "first_pay_disable"
    EXPIRATION_EXTEND = "expiration_extend"


class ApprovalLevel(str, Enum):
    NONE = "none"
    REVIEW = "review"
    BIOMETRIC = "biometric"


_APPROVAL_ORDER = [ApprovalLevel.NONE, ApprovalLevel.REVIEW, ApprovalLevel.BIOMETRIC]

CHANGE_APPROVAL = {
    ChangeType.BUDGET_INCREASE: ApprovalLevel.BIOMETRIC,
    ChangeType.SCOPE_ESCALATION: ApprovalLevel.BIOMETRIC,
    ChangeType.ADDR_REMOVE_ALL: ApprovalLevel.BIOMETRIC,
    ChangeType.ADDR_ADD: ApprovalLevel.REVIEW,
    ChangeType.TIME_WINDOW_REMOVE: ApprovalLevel.REVIEW,
    ChangeType.MIN_BALANCE_LOWER: ApprovalLevel.REVIEW,
    ChangeType.FIRST_PAY_DISABLE: ApprovalLevel.REVIEW,
    ChangeType.EXPIRATION_EXTEND: ApprovalLevel.REVIEW,
}


@dataclass(frozen=True)
class PolicyChange:
    type: ChangeType
    detail: str


@dataclass(frozen=True)
class PolicyChangeReport:
    changes: Tuple[PolicyChange, ...]
    required_approval: ApprovalLevel


def _cap_raised(old: Optional[int], new: Optional[int]) -> bool:
    # removing a previously defined cap = raising it to infinity;
    # defining a previously absent cap tightens and is not an increase
    if old is None:
        return False
    if new is None:
        return True
    return new > old


def classify_change(old: Policy, new: Policy) -> PolicyChangeReport:
    if old.id != new.id:
        raise ValueError("policies must share an id")
    oc, nc = old.conditions, new.conditions
    changes: List[PolicyChange] = []

    for name in ("max_amount_per_tx", "max_amount_per_day",
                 "max_amount_per_week", "max_amount_per_month"):
        if _cap_raised(getattr(oc, name), getattr(nc, name)):
            changes.append(PolicyChange(
                ChangeType.BUDGET_INCREASE,
                f"{name}: {getattr(oc, name)} -> {getattr(nc, name)}",
            ))
    if new.scope.rank > old.scope.rank:
        changes.append(PolicyChange(
            ChangeType.SCOPE_ESCALATION,
            f"scope: {old.scope.value} -> {new.scope.value}",
        ))
    if oc.allow_list_addresses and not nc.allow_list_addresses:
        changes.append(PolicyChange(
            ChangeType.ADDR_REMOVE_ALL, "address allowlist cleared"
        ))
    elif nc.allow_list_addresses:
        added = set(nc.allow_list_addresses) - set(oc.allow_list_addresses)
        if added:
            changes.append(PolicyChange(
                ChangeType.ADDR_ADD, f"addresses added: {sorted(added)}"
            ))
    if oc.time_window is not None and nc.time_window is None:
        changes.append(PolicyChange(
            ChangeType.TIME_WINDOW_REMOVE, "time window removed"
        ))
    if nc.min_balance_after < oc.min_balance_after:
        changes.append(PolicyChange(
            ChangeType.MIN_BALANCE_LOWER,
            f"min_balance_after: {oc.min_balance_after} -> {nc.min_balance_after}",
        ))
    if oc.require_review_first_pay and not nc.require_review_first_pay:
        changes.append(PolicyChange(
            ChangeType.FIRST_PAY_DISABLE, "first-payment review disabled"
        ))
    if new.expires_at > old.expires_at:
        changes.append(PolicyChange(
            ChangeType.EXPIRATION_EXTEND,
            f"expires_at: {old.expires_at} -> {new.expires_at}",
        ))

    required = ApprovalLevel.NONE
    for change in changes:
        level = CHANGE_APPROVAL[change.type]
        if _APPROVAL_ORDER.index(level) > _APPROVAL_ORDER.index(required):
            required = level
    return PolicyChangeReport(tuple(changes), required)
