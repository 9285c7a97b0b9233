"""Unlinkability experiment: simulate isolated-level transactions on a
toy ledger, consolidate under three countermeasure configurations, and
run a clustering adversary (common-input ownership + temporal
proximity) against ground truth.

linkage_rate = correctly-linked same-principal address pairs / true
same-principal pairs. Cross-principal (false) links do not help the
adversary's recall and are not counted.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, List, Tuple

from ..constants import (
    CONSOLIDATION_BATCH_SIZE,
    CONSOLIDATION_INTERVAL_MS,
    CONSOLIDATION_JITTER_RATIO,
    INTER_BATCH_DELAY_MAX_MS,
    INTER_BATCH_DELAY_MIN_MS,
)
from ..crypto import (
    AddressNamespace,
    Curve,
    MasterCredential,
    address_for,
    derive_contextual_keypair,
    derive_identity_root,
)
from ..privacy import build_context, fisher_yates_shuffle, next_consolidation_delay

EPSILON_MS = 5 * 60_000  # temporal-proximity adversary parameter
EPSILON_SWEEP_MINUTES = (1, 5, 10, 15, 30)

SIM_HORIZON_MS = 72 * 3_600_000  # tx arrivals over 3 days


class LinkabilityConfig(str, Enum):
    NONE = "none"
    JITTER_ONLY = "jitter_only"
    FULL = "full_countermeasures"


@dataclass(frozen=True)
class ConsolidationTx:
    inputs: Tuple[str, ...]
    timestamp: int
    principal: str  # ground truth only; hidden from the adversary


@dataclass
class LinkabilityReport:
    n_tx: int
    seed: int
    epsilon_ms: int
    linkage_rates: Dict[str, float]
    epsilon_sweep: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "n_tx": self.n_tx,
            "seed": self.seed,
            "epsilon_ms": self.epsilon_ms,
            "linkage_rates": dict(sorted(self.linkage_rates.items())),
            "epsilon_sweep": {
                k: dict(sorted(v.items()))
                for k, v in sorted(self.epsilon_sweep.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    def to_markdown(self) -> str:
        lines = [
            "## Unlinkability",
            "",
            f"{self.n_tx} isolated-level transactions, "
            f"temporal-proximity epsilon = {self.epsilon_ms // 60000} min",
            "",
            "| configuration | linkage rate |",
            "| --- | --- |",
        ]
        for config, rate in self.linkage_rates.items():
            lines.append(f"| {config} | {rate:.4f} |")
        if self.epsilon_sweep:
            lines += ["", "| epsilon (min) | " + " | ".join(self.epsilon_sweep) + " |",
                      "| --- | " + " | ".join("---" for _ in self.epsilon_sweep) + " |"]
            minutes = sorted(
                {int(m) for rates in self.epsilon_sweep.values() for m in rates}
            )
            for m in minutes:
                row = [f"| {m} "]
                for config in self.epsilon_sweep:
                    row.append(f"| {self.epsilon_sweep[config][str(m)]:.4f} ")
                lines.append("".join(row) + "|")
        return "\n".join(lines) + "\n"


def _simulate_addresses(
    n_tx: int, n_agents: int, rng: random.Random
) -> Dict[str, List[Tuple[str, int]]]:
    """Per principal: list of (ephemeral address, funding timestamp).

    Addresses come from the real context-isolation derivation (ed25519
    namespace for speed), so uniqueness is inherited, not assumed.
    """
    root = derive_identity_root(MasterCredential(b"\x22" * 32, "linkability-sim"))
    per_principal: Dict[str, List[Tuple[str, int]]] = {}
    for a in range(n_agents):
        principal = f"sim-agent-{a}"
        count = n_tx // n_agents + (1 if a < n_tx % n_agents else 0)
        txs = []
        for i in range(count):
            ctx = build_context(
                {"agent": principal, "dir": "inbound", "seq": str(i), "tx": f"t{a}-{i}"}
            )
            address = address_for(
                derive_contextual_keypair(root, Curve.ED25519, ctx),
                AddressNamespace.ED25519_CHAIN,
            )
            txs.append((address, rng.randrange(0, SIM_HORIZON_MS)))
        txs.sort(key=lambda item: item[1])
        per_principal[principal] = txs
    return per_principal


def _consolidate(
    per_principal: Dict[str, List[Tuple[str, int]]],
    config: LinkabilityConfig,
    rng: random.Random,
) -> List[ConsolidationTx]:
    ledger: List[ConsolidationTx] = []
    for principal, txs in per_principal.items():
        if config is LinkabilityConfig.NONE:
            # one sweep containing every address, right after the horizon
            ledger.append(
                ConsolidationTx(
                    inputs=tuple(a for a, _ in txs),
                    timestamp=SIM_HORIZON_MS + rng.randrange(0, 60_000),
                    principal=principal,
                )
            )
            continue
        # periodic sweeps at jittered ~4h intervals
        sweep_time = next_consolidation_delay(
            CONSOLIDATION_INTERVAL_MS, CONSOLIDATION_JITTER_RATIO, rng.random()
        )
        pending: List[str] = []
        index = 0
        while index < len(txs) or pending:
            while index < len(txs) and txs[index][1] <= sweep_time:
                pending.append(txs[index][0])
                index += 1
            if pending:
                if config is LinkabilityConfig.JITTER_ONLY:
                    ledger.append(
                        ConsolidationTx(tuple(pending), sweep_time, principal)
                    )
                else:  # FULL: shuffle, batch, spaced batches
                    fisher_yates_shuffle(pending, rng)
                    offset = 0
                    for start in range(0, len(pending), CONSOLIDATION_BATCH_SIZE):
                        batch = pending[start:start + CONSOLIDATION_BATCH_SIZE]
                        ledger.append(
                            ConsolidationTx(
                                tuple(batch), sweep_time + offset, principal
                            )
                        )
                        offset += rng.randint(
                            INTER_BATCH_DELAY_MIN_MS, INTER_BATCH_DELAY_MAX_MS
                        )
                pending = []
            sweep_time += next_consolidation_delay(
                CONSOLIDATION_INTERVAL_MS, CONSOLIDATION_JITTER_RATIO, rng.random()
            )
    return ledger


def _adversary_linked_pairs(
    ledger: List[ConsolidationTx], epsilon_ms: int
) -> set:
    """Cluster addresses by (i) co-appearance as inputs of one tx and
    (ii) consolidation times within epsilon, then return linked pairs."""
    linked = set()
    consolidated_at: List[Tuple[str, int]] = []
    for tx in ledger:
        for pair in combinations(sorted(tx.inputs), 2):
            linked.add(pair)
        for address in tx.inputs:
            consolidated_at.append((address, tx.timestamp))
    consolidated_at.sort(key=lambda item: item[1])
    # temporal proximity over the time-sorted consolidation events
    for i, (addr_i, t_i) in enumerate(consolidated_at):
        for addr_j, t_j in consolidated_at[i + 1:]:
            if t_j - t_i > epsilon_ms:
                break
            if addr_i != addr_j:
                linked.add(tuple(sorted((addr_i, addr_j))))
    return linked


def _linkage_rate(
    per_principal: Dict[str, List[Tuple[str, int]]],
    ledger: List[ConsolidationTx],
    epsilon_ms: int,
) -> float:
    true_pairs = set()
    for txs in per_principal.values():
        addresses = sorted(a for a, _ in txs)
        true_pairs.update(combinations(addresses, 2))
    linked = _adversary_linked_pairs(ledger, epsilon_ms)
    return len(linked & true_pairs) / len(true_pairs)


def run_linkability(
    n_tx: int = 1000,
    config: LinkabilityConfig = LinkabilityConfig.FULL,
    seed: int = 1,
    n_agents: int = 5,
    epsilon_ms: int = EPSILON_MS,
) -> float:
    rng = random.Random(seed)
    per_principal = _simulate_addresses(n_tx, n_agents, rng)
    ledger = _consolidate(per_principal, config, rng)
    return _linkage_rate(per_principal, ledger, epsilon_ms)


def run_linkability_suite(
    n_tx: int = 1000, seed: int = 1, n_agents: int = 5
) -> LinkabilityReport:
    rng = random.Random(seed)
    per_principal = _simulate_addresses(n_tx, n_agents, rng)
    rates: Dict[str, float] = {}
    sweep: Dict[str, Dict[str, float]] = {}
    for config in LinkabilityConfig:
        ledger = _consolidate(per_principal, config, random.Random(seed + 1))
        rates[config.value] = _linkage_rate(per_principal, ledger, EPSILON_MS)
        sweep[config.value] = {
            str(minutes): _linkage_rate(per_principal, ledger, minutes * 60_000)
            for minutes in EPSILON_SWEEP_MINUTES
        }
    return LinkabilityReport(
        n_tx=n_tx,
        seed=seed,
        epsilon_ms=EPSILON_MS,
        linkage_rates=rates,
        epsilon_sweep=sweep,
    )
