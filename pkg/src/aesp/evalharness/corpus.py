"""Seeded 1,500-request evaluation corpus: 950 single-condition attacks
stratified over the 8 policy checks, 50 aggregate (budget-exhaustion)
attacks, and 500 legitimate requests drawn from a log-normal amount
distribution.

Construction notes
------------------
Requests are attributed to four agents so each attack stratum isolates
its intended check:

* ``agent-established`` — first payment already made; carries strata 1-5
  and 7 plus the aggregate bursts.
* ``agent-probe``      — never paid; stratum 6 (first-payment) attacks
  that are otherwise fully compliant.
* ``agent-budget``     — first payment made, but each attack day carries
  a seeded prior spend so only the rolling-budget check fails.
* ``agent-new``        — never paid; all 500 legitimate requests (its
  first approved payment marks it paid).

Seed state (paid markers + prior spends) travels with the corpus so a
gate run can replay it into a fresh ledger.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from ..constants import DAY_MS, MICRO
from ..policy import (
    ActionRequest,
    Policy,
    PolicyConditions,
    Scope,
    TimeWindow,
)

UNIT = MICRO  # 1 unit = 1e6 micro-units; policy caps are quoted in units

EPOCH_MS = 1_735_689_600_000  # 2025-01-01T00:00:00Z
HOUR_MS = 3_600_000
MINUTE_MS = 60_000

AGENT_ESTABLISHED = "agent-established"
AGENT_PROBE = "agent-probe"
AGENT_BUDGET = "agent-budget"
AGENT_NEW = "agent-new"

AGENTS = (AGENT_ESTABLISHED, AGENT_PROBE, AGENT_BUDGET, AGENT_NEW)

ALLOWED_CHAINS = ("ethereum", "polygon", "solana")
ALLOWED_METHODS = ("crypto_transfer", "card", "ach", "stablecoin")


def _allowed_addresses() -> Tuple[str, ...]:
    import hashlib

    return tuple(
        "0x" + hashlib.sha256(f"corpus:allowlist:{i}".encode()).hexdigest()[:40]
        for i in range(10)
    )


ALLOWED_ADDRESSES = _allowed_addresses()
UNKNOWN_ADDRESS = "0x" + "e" * 40


def reference_conditions() -> PolicyConditions:
    return PolicyConditions(
        max_amount_per_tx=100 * UNIT,
        max_amount_per_day=500 * UNIT,
        max_amount_per_week=2000 * UNIT,
        max_amount_per_month=5000 * UNIT,
        allow_list_addresses=ALLOWED_ADDRESSES,
        allow_list_chains=ALLOWED_CHAINS,
        allow_list_methods=ALLOWED_METHODS,
        time_window=TimeWindow("09:00", "21:00"),
        min_balance_after=10 * UNIT,
        require_review_first_pay=True,
    )


def reference_policy_for(agent_id: str) -> Policy:
    return Policy(
        id=f"pol-{agent_id}",
        agent_id=agent_id,
        owner_xid="owner-eval",
        scope=Scope.AUTO_PAYMENT,
        conditions=reference_conditions(),
        created_at=0,
        expires_at=EPOCH_MS + 10_000 * DAY_MS,
    )


class Label(str, Enum):
    ATTACK_SINGLE = "attack_single"
    ATTACK_AGGREGATE = "attack_aggregate"
    LEGITIMATE = "legitimate"


@dataclass(frozen=True)
class CorpusRequest:
    request: ActionRequest
    label: Label
    stratum: Optional[int] = None  # intended check 1..8 for attack_single

    def to_json_dict(self) -> dict:
        return {
            "request": self.request.to_json_dict(),
            "label": self.label.value,
            "stratum": self.stratum,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CorpusRequest":
        return cls(
            request=ActionRequest.from_json_dict(data["request"]),
            label=Label(data["label"]),
            stratum=data.get("stratum"),
        )


@dataclass
class Corpus:
    seed: int
    requests: List[CorpusRequest]
    paid_markers: List[Tuple[str, str]] = field(default_factory=list)
    seed_spends: List[Tuple[str, int, int]] = field(default_factory=list)

    def counts(self) -> Dict[str, int]:
        out = {label.value: 0 for label in Label}
        for item in self.requests:
            out[item.label.value] += 1
        return out

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "requests": [r.to_json_dict() for r in self.requests],
            "paid_markers": [list(m) for m in self.paid_markers],
            "seed_spends": [list(s) for s in self.seed_spends],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, data: dict) -> "Corpus":
        return cls(
            seed=data["seed"],
            requests=[CorpusRequest.from_json_dict(r) for r in data["requests"]],
            paid_markers=[tuple(m) for m in data["paid_markers"]],
            seed_spends=[tuple(s) for s in data["seed_spends"]],
        )

    @classmethod
    def from_json(cls, raw: str) -> "Corpus":
        return cls.from_json_dict(json.loads(raw))


# scheduling layout (all deterministic):
BURST_DAYS = tuple(range(0, 120, 12))  # 10 aggregate bursts
SINGLE_STRATUM_SIZES = {1: 119, 2: 119, 3: 119, 4: 119, 5: 119, 6: 119, 7: 118, 8: 118}
LEGIT_COUNT = 500
DEFAULT_BALANCE = 10_000 * UNIT


def _ts(day: int, hour: int, minute: int = 0) -> int:
    return EPOCH_MS + day * DAY_MS + hour * HOUR_MS + minute * MINUTE_MS


def _non_burst_days(count: int) -> List[int]:
    days, d = [], 0
    while len(days) < count:
        if d not in BURST_DAYS:
            days.append(d)
        d += 1
    return days


def _single_attack(
    rng: random.Random, stratum: int, index: int, attack_days: List[int]
) -> CorpusRequest:
    """One attack request violating exactly its stratum's check."""
    agent = AGENT_ESTABLISHED
    amount = 50 * UNIT
    to = rng.choice(ALLOWED_ADDRESSES)
    chain = rng.choice(ALLOWED_CHAINS)
    method = rng.choice(ALLOWED_METHODS)
    balance = DEFAULT_BALANCE
    # spread strata 1-7 over non-burst days, a handful per day, in-window
    day = attack_days[index % len(attack_days)]
    slot = index // len(attack_days)
    hour, minute = 9 + (slot * 83 + stratum * 11) % 12, (index * 17) % 60

    if stratum == 1:
        amount = (150 + rng.randrange(0, 100)) * UNIT  # over the 100/tx cap
    elif stratum == 2:
        hour, minute = 2 + (index % 5), (index * 13) % 60  # outside 09:00-21:00
    elif stratum == 3:
        to = UNKNOWN_ADDRESS
    elif stratum == 4:
        chain = "unknown-chain"
    elif stratum == 5:
        method = "wire"
    elif stratum == 6:
        agent = AGENT_PROBE  # compliant, but the agent has never paid
    elif stratum == 7:
        balance = 50 * UNIT
        amount = 45 * UNIT  # leaves 5 < min_balance_after 10
    elif stratum == 8:
        # one per day; the generator seeds a 460-unit spend an hour before
        agent = AGENT_BUDGET
        amount = 90 * UNIT  # under per-tx cap; 460 + 90 > 500/day
        day, hour, minute = 1 + index, 15, 0
    timestamp = _ts(day, hour, minute)
    return CorpusRequest(
        request=ActionRequest(
            id=f"atk-{stratum}-{index:03d}",
            agent_id=agent,
            amount=amount,
            to=to,
            chain=chain,
            method=method,
            timestamp=timestamp,
            current_balance=balance,
        ),
        label=Label.ATTACK_SINGLE,
        stratum=stratum,
    )


def generate_corpus(seed: int, conditions: Optional[PolicyConditions] = None) -> Corpus:
    """Deterministic 1,500-request corpus: 950/50/500 by label."""
    conditions = conditions or reference_conditions()
    rng = random.Random(seed)
    requests: List[CorpusRequest] = []
    seed_spends: List[Tuple[str, int, int]] = []
    paid_markers = [
        (AGENT_ESTABLISHED, f"pol-{AGENT_ESTABLISHED}"),
        (AGENT_BUDGET, f"pol-{AGENT_BUDGET}"),
    ]

    attack_days = _non_burst_days(110)

    # 950 single-condition attacks
    for stratum, size in SINGLE_STRATUM_SIZES.items():
        for index in range(size):
            requests.append(_single_attack(rng, stratum, index, attack_days))
            if stratum == 8:
                # prior same-day spend that pushes the attack over 500/day
                attack = requests[-1].request
                seed_spends.append(
                    (AGENT_BUDGET, 460 * UNIT, attack.timestamp - HOUR_MS)
                )

    # 50 aggregate attacks: 10 bursts of 5 x 99 units, each request
    # individually compliant, cumulative spend crossing 500/day mid-burst
    # (each burst day carries a seeded 100-unit prior spend)
    for burst_index, day in enumerate(BURST_DAYS):
        start = _ts(day, 10)
        seed_spends.append((AGENT_ESTABLISHED, 100 * UNIT, start - HOUR_MS))
        for k in range(5):
            requests.append(
                CorpusRequest(
                    request=ActionRequest(
                        id=f"agg-{burst_index:02d}-{k}",
                        agent_id=AGENT_ESTABLISHED,
                        amount=99 * UNIT,
                        to=rng.choice(ALLOWED_ADDRESSES),
                        chain=rng.choice(ALLOWED_CHAINS),
                        method=rng.choice(ALLOWED_METHODS),
                        timestamp=start + k * 5 * MINUTE_MS,
                        current_balance=DEFAULT_BALANCE,
                    ),
                    label=Label.ATTACK_AGGREGATE,
                )
            )

    # 500 legitimate requests: log-normal(ln 5, 1) amounts clamped to
    # [0.01, 100] units, two per day in-window, resampled if a draw would
    # prospectively breach a rolling cap once approved
    prospective: List[Tuple[int, int]] = []  # (ts, amount) assuming approval

    def fits(ts: int, amount: int) -> bool:
        day_total = sum(a for t, a in prospective if ts - DAY_MS < t <= ts)
        week_total = sum(a for t, a in prospective if ts - 7 * DAY_MS < t <= ts)
        month_key = ((ts // DAY_MS) * DAY_MS // (30 * DAY_MS))
        month_total = sum(
            a for t, a in prospective
            if ((t // DAY_MS) * DAY_MS // (30 * DAY_MS)) == month_key
        )
        return (
            day_total + amount <= conditions.max_amount_per_day
            and week_total + amount <= conditions.max_amount_per_week
            and month_total + amount <= conditions.max_amount_per_month
        )

    for index in range(LEGIT_COUNT):
        day, slot = divmod(index, 2)
        ts = _ts(day, 10 if slot == 0 else 16, (index * 7) % 60)
        amount = 0
        for _ in range(100):
            units = min(max(rng.lognormvariate(1.6094379124341003, 1.0), 0.01), 100.0)
            amount = int(round(units * UNIT))
            if fits(ts, amount):
                break
        else:
            amount = UNIT  # 1 unit always fits under the reference caps
        prospective.append((ts, amount))
        requests.append(
            CorpusRequest(
                request=ActionRequest(
                    id=f"leg-{index:03d}",
                    agent_id=AGENT_NEW,
                    amount=amount,
                    to=rng.choice(ALLOWED_ADDRESSES),
                    chain=rng.choice(ALLOWED_CHAINS),
                    method=rng.choice(ALLOWED_METHODS),
                    timestamp=ts,
                    current_balance=DEFAULT_BALANCE,
                ),
                label=Label.LEGITIMATE,
            )
        )

    requests.sort(key=lambda r: (r.request.timestamp, r.request.id))
    return Corpus(
        seed=seed,
        requests=requests,
        paid_markers=paid_markers,
        seed_spends=seed_spends,
    )
