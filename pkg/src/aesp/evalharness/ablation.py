"""Per-check ablation: rerun the full 8-check gate with one check
removed at a time and report each check's marginal contribution to the
auto-block rate."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict

from ..policy import CHECK_IDS
from .corpus import Corpus
from .gates import GateConfig, GateId, run_gate


@dataclass
class AblationReport:
    full_rate: float
    ablated_rates: Dict[int, float]
    deltas: Dict[int, float]

    def to_json_dict(self) -> dict:
        return {
            "full_rate": self.full_rate,
            "ablated_rates": {str(k): v for k, v in sorted(self.ablated_rates.items())},
            "deltas": {str(k): v for k, v in sorted(self.deltas.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    def to_markdown(self) -> str:
        lines = [
            "## Per-check ablation",
            "",
            f"Full 8-check auto-block rate: {self.full_rate:.4f}",
            "",
            "| removed check | auto-block rate | delta |",
            "| --- | --- | --- |",
        ]
        for check in sorted(self.deltas):
            lines.append(
                f"| {check} | {self.ablated_rates[check]:.4f} "
                f"| {self.deltas[check]:+.4f} |"
            )
        return "\n".join(lines) + "\n"


def run_ablation(corpus: Corpus) -> AblationReport:
    full = run_gate(GateConfig.named(GateId.B3), corpus)
    ablated_rates: Dict[int, float] = {}
    deltas: Dict[int, float] = {}
    for check in CHECK_IDS:
        remaining = tuple(c for c in CHECK_IDS if c != check)
        config = GateConfig(GateId.B3, remaining, False)
        report = run_gate(config, corpus)
        ablated_rates[check] = report.auto_blocked_rate
        deltas[check] = full.auto_blocked_rate - report.auto_blocked_rate
    return AblationReport(
        full_rate=full.auto_blocked_rate,
        ablated_rates=ablated_rates,
        deltas=deltas,
    )
