"""Baseline gate configurations B0-B3 + FULL, corpus replay, and the
security metrics report.

Metric semantics
----------------
* auto_blocked_rate — fraction of attack requests the gate
  deterministically rejects. This is the guaranteed defense: it does not
  depend on human behavior. Under B1-B3 rejected requests are silently
  dropped; under FULL the same rejections are escalated to the human.
* escalation_load_rate — fraction of attack requests handed to the
  human (0 unless escalation is enabled; equals auto_blocked_rate under
  FULL since every gate rejection escalates).
* passed — attack requests that executed: gate-approved, plus (under
  FULL) escalations the simulated human approved. The partition
  (auto_blocked - escalated_approved) + passed = total holds for every
  config.
* false_positive_rate — fraction of legitimate requests not
  auto-approved by the gate (i.e. requiring human attention or dropped).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from ..policy import BudgetLedger, Verdict, evaluate
from .corpus import Corpus, Label, reference_policy_for


class GateId(str, Enum):
    B0 = "B0"
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"
    FULL = "FULL"


@dataclass(frozen=True)
class GateConfig:
    id: GateId
    enabled_checks: Tuple[int, ...]
    escalation_enabled: bool

    @classmethod
    def named(cls, gate_id: "GateId | str") -> "GateConfig":
        return GATE_CONFIGS[GateId(gate_id)]


GATE_CONFIGS: Dict[GateId, GateConfig] = {
    GateId.B0: GateConfig(GateId.B0, (), False),
    GateId.B1: GateConfig(GateId.B1, (1,), False),
    GateId.B2: GateConfig(GateId.B2, (1, 2), False),
    GateId.B3: GateConfig(GateId.B3, (1, 2, 3, 4, 5, 6, 7, 8), False),
    GateId.FULL: GateConfig(GateId.FULL, (1, 2, 3, 4, 5, 6, 7, 8), True),
}


class HumanPolicy(str, Enum):
    APPROVE_ALL = "approve_all"
    REJECT_ALL = "reject_all"
    OPTIMAL = "optimal"  # rejects escalated attacks, approves legitimates


@dataclass
class SecurityReport:
    gate: GateId
    human: Optional[HumanPolicy]
    auto_blocked_rate: float
    escalation_load_rate: float
    false_positive_rate: float
    per_check_attribution: Dict[int, int]
    counts: Dict[str, int] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "gate": self.gate.value,
            "human": self.human.value if self.human else None,
            "auto_blocked_rate": self.auto_blocked_rate,
            "escalation_load_rate": self.escalation_load_rate,
            "false_positive_rate": self.false_positive_rate,
            "per_check_attribution": {
                str(k): v for k, v in sorted(self.per_check_attribution.items())
            },
            "counts": dict(sorted(self.counts.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    def to_markdown(self) -> str:
        lines = [
            f"## Gate {self.gate.value}",
            "",
            "| metric | value |",
            "| --- | --- |",
            f"| auto-blocked (attacks) | {self.auto_blocked_rate:.4f} |",
            f"| escalation load (attacks) | {self.escalation_load_rate:.4f} |",
            f"| false positive rate (legit) | {self.false_positive_rate:.4f} |",
            "",
            "| check | first-fail attribution |",
            "| --- | --- |",
        ]
        for check, count in sorted(self.per_check_attribution.items()):
            lines.append(f"| {check} | {count} |")
        return "\n".join(lines) + "\n"


def _prepare_ledger(corpus: Corpus) -> BudgetLedger:
    ledger = BudgetLedger()
    for agent_id, policy_id in corpus.paid_markers:
        ledger.mark_paid(agent_id, policy_id)
    for agent_id, amount, ts in corpus.seed_spends:
        ledger.record_spend(agent_id, amount, ts)
    return ledger


def run_gate(
    config: GateConfig,
    corpus: Corpus,
    human: HumanPolicy = HumanPolicy.OPTIMAL,
) -> SecurityReport:
    """Replay the corpus in timestamp order against one gate config.

    Approved spends are recorded into the ledger as they happen, so
    aggregate attacks interact with the budget checks exactly as they
    would live.
    """
    ledger = _prepare_ledger(corpus)
    policies = {
        agent: reference_policy_for(agent)
        for agent in {item.request.agent_id for item in corpus.requests}
    }
    enabled = config.enabled_checks

    attack_total = blocked = escalated_approved = attack_passed = 0
    legit_total = legit_auto = 0
    attribution: Dict[int, int] = {}

    for item in corpus.requests:
        request = item.request
        policy = policies[request.agent_id]
        decision = evaluate(
            request, [policy], ledger, request.timestamp, enabled_checks=enabled
        )
        approved = decision.verdict is Verdict.APPROVED
        executed = approved
        if not approved and config.escalation_enabled:
            if human is HumanPolicy.APPROVE_ALL:
                executed = True
            elif human is HumanPolicy.OPTIMAL:
                executed = item.label is Label.LEGITIMATE
        if executed:
            ledger.record_spend(request.agent_id, request.amount, request.timestamp)
            ledger.mark_paid(request.agent_id, policy.id)

        is_attack = item.label is not Label.LEGITIMATE
        if is_attack:
            attack_total += 1
            if not approved:
                blocked += 1
                failed = decision.failed_checks.get(policy.id) or []
                if failed:
                    attribution[failed[0]] = attribution.get(failed[0], 0) + 1
                if executed:
                    escalated_approved += 1
            if executed:
                attack_passed += 1
        else:
            legit_total += 1
            if approved:
                legit_auto += 1

    return SecurityReport(
        gate=config.id,
        human=human if config.escalation_enabled else None,
        auto_blocked_rate=blocked / attack_total if attack_total else 0.0,
        escalation_load_rate=(
            blocked / attack_total
            if config.escalation_enabled and attack_total
            else 0.0
        ),
        false_positive_rate=(
            (legit_total - legit_auto) / legit_total if legit_total else 0.0
        ),
        per_check_attribution=attribution,
        counts={
            "attack_total": attack_total,
            "attack_auto_blocked": blocked,
            "attack_escalated_approved": escalated_approved,
            "attack_passed": attack_passed,
            "legit_total": legit_total,
            "legit_auto_approved": legit_auto,
        },
    )
