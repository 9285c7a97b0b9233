"""Latency benchmarking protocol: per operation, 100 warm-up iterations
discarded, >=1000 timed iterations per trial, >=5 trials, median with
interquartile range. Single-threaded by construction."""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List

from ..constants import MICRO
from ..crypto import (
    Curve,
    MasterCredential,
    derive_contextual_keypair,
    derive_identity_root,
    sha256,
    sign,
)
from ..policy import BudgetLedger, evaluate
from .corpus import ALLOWED_ADDRESSES, ALLOWED_CHAINS, ALLOWED_METHODS, EPOCH_MS, UNIT
from .corpus import reference_policy_for
from ..policy import ActionRequest

DEFAULT_OPS = (
    "policy_eval_8check",
    "budget_query",
    "ed25519_sign",
    "hkdf_derive",
    "sha256_hash",
    "end_to_end_authorize",
)

ALL_OPS = DEFAULT_OPS + ("secp256k1_sign", "eip712_sign")


@dataclass
class OpStats:
    median_ms: float
    iqr_ms: float
    trials: int
    iterations: int

    def to_json_dict(self) -> dict:
        return {
            "median_ms": self.median_ms,
            "iqr_ms": self.iqr_ms,
            "trials": self.trials,
            "iterations": self.iterations,
        }


@dataclass
class LatencyReport:
    operations: Dict[str, OpStats]

    def to_json_dict(self) -> dict:
        return {name: stats.to_json_dict() for name, stats in self.operations.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    def to_markdown(self) -> str:
        lines = [
            "## Latency",
            "",
            "| operation | median (ms) | IQR (ms) | trials | iterations/trial |",
            "| --- | --- | --- | --- | --- |",
        ]
        for name, s in self.operations.items():
            lines.append(
                f"| {name} | {s.median_ms:.4f} | {s.iqr_ms:.4f} "
                f"| {s.trials} | {s.iterations} |"
            )
        return "\n".join(lines) + "\n"


def _fixture():
    """Shared, pre-built state so the timed loop measures only the op."""
    root = derive_identity_root(MasterCredential(b"\x11" * 32, "bench-passphrase"))
    agent_id = "agent-established"
    policy = reference_policy_for(agent_id)
    ledger = BudgetLedger()
    ledger.mark_paid(agent_id, policy.id)
    now = EPOCH_MS + 11 * 3_600_000  # 11:00, inside the reference window
    request = ActionRequest(
        id="bench",
        agent_id=agent_id,
        amount=5 * UNIT,
        to=ALLOWED_ADDRESSES[0],
        chain=ALLOWED_CHAINS[0],
        method=ALLOWED_METHODS[0],
        timestamp=now,
        current_balance=10_000 * UNIT,
    )
    ed_keypair = derive_contextual_keypair(root, Curve.ED25519, "bench:sign:")
    payload = b"benchmark-payload-" + b"x" * 46
    return root, policy, ledger, request, now, ed_keypair, payload


def _build_ops() -> Dict[str, Callable[[], object]]:
    root, policy, ledger, request, now, ed_keypair, payload = _fixture()
    counter = {"n": 0}

    def policy_eval_8check():
        return evaluate(request, [policy], ledger, now)

    def budget_query():
        return ledger.rolling_totals(request.agent_id, now)

    def ed25519_sign():
        return sign(ed_keypair, payload)

    def hkdf_derive():
        counter["n"] += 1
        return derive_contextual_keypair(
            root, Curve.ED25519, f"bench:derive:{counter['n']}:"
        )

    def sha256_hash():
        return sha256(payload)

    def end_to_end_authorize():
        decision = evaluate(request, [policy], ledger, now)
        counter["n"] += 1
        keypair = derive_contextual_keypair(
            root, Curve.ED25519, f"bench:e2e:{counter['n']}:"
        )
        return sign(keypair, payload), decision

    def secp256k1_sign():
        from ..crypto import sign_typed_data_with_context

        return sign_typed_data_with_context(root, "bench:secp:", sha256(payload))

    def eip712_sign():
        from ..commitment import CommitmentValue, build, sign_as, Role
        from ..crypto import contextual_evm_address

        buyer = contextual_evm_address(root, "bench:buyer:")
        value = CommitmentValue(
            buyer_agent=buyer,
            seller_agent="0x" + "2" * 40,
            item="benchmark-item",
            price="1000000",
            currency="0x" + "3" * 40,
            delivery_deadline=(now // 1000) + 86_400,
            arbitrator="0x" + "4" * 40,
            escrow_required=True,
            nonce="1",
        )
        record = build(1, value)
        return sign_as(record, Role.BUYER, root, "bench:buyer:")

    return {
        "policy_eval_8check": policy_eval_8check,
        "budget_query": budget_query,
        "ed25519_sign": ed25519_sign,
        "hkdf_derive": hkdf_derive,
        "sha256_hash": sha256_hash,
        "end_to_end_authorize": end_to_end_authorize,
        "secp256k1_sign": secp256k1_sign,
        "eip712_sign": eip712_sign,
    }


OPS = tuple(ALL_OPS)


def run_latency_bench(
    ops: Iterable[str] = DEFAULT_OPS,
    *,
    warmups: int = 100,
    iterations: int = 1000,
    trials: int = 5,
) -> LatencyReport:
    if iterations < 1000 or trials < 5 or warmups < 100:
        raise ValueError("protocol floor: >=100 warmups, >=1000 iterations, >=5 trials")
    registry = _build_ops()
    results: Dict[str, OpStats] = {}
    for name in ops:
        if name not in registry:
            raise ValueError(f"unknown operation: {name}")
        op = registry[name]
        samples: List[float] = []
        for _ in range(trials):
            for _ in range(warmups):
                op()
            for _ in range(iterations):
                start = time.perf_counter_ns()
                op()
                samples.append((time.perf_counter_ns() - start) / 1e6)
        quartiles = statistics.quantiles(samples, n=4)
        results[name] = OpStats(
            median_ms=statistics.median(samples),
            iqr_ms=quartiles[2] - quartiles[0],
            trials=trials,
            iterations=iterations,
        )
    return LatencyReport(operations=results)
