"""Context-string construction, the three privacy levels, pre-derived
address pools, consolidation scheduling (jitter/shuffle/batching), and
encrypted audit tags.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from .constants import (
    ADDRESS_POOL_SIZE,
    AUDIT_BATCH_THRESHOLD,
    AUDIT_TIME_WINDOW_MS,
    CONSOLIDATION_BATCH_SIZE,
    INTER_BATCH_DELAY_MAX_MS,
    INTER_BATCH_DELAY_MIN_MS,
)
from .crypto import (
    AddressNamespace,
    Curve,
    IdentityRoot,
    address_for,
    canonical_json,
    derive_contextual_keypair,
    seal_secret,
    sha256,
    unseal_secret,
)


class PrivacyError(Exception):
    pass


class PoolExhausted(PrivacyError):
    pass


class PrivacyLevel(str, Enum):
    TRANSPARENT = "transparent"
    BASIC = "basic"
    ISOLATED = "isolated"


class Direction(str, Enum):
    INBOUND = "inbound"
    OUTBOUND = "outbound"


# --- context strings -------------------------------------------------------

_ALLOWED_SEGMENT_KEYS = {"agent", "dir", "seq", "tx", "mode", "pool"}


def build_context(segments: Dict[str, str]) -> str:
    """Render "key:value" segments, sort lexicographically, join with ':'
    and append a trailing ':'. Values must be colon-free to keep the
    encoding unambiguous."""
    if not segments:
        raise ValueError("segments must be non-empty")
    rendered = []
    for key, value in segments.items():
        if key not in _ALLOWED_SEGMENT_KEYS:
            raise ValueError(f"unknown context segment key: {key}")
        value = str(value)
        if ":" in value:
            raise ValueError(f"segment value may not contain ':': {value!r}")
        rendered.append(f"{key}:{value}")
    return ":".join(sorted(rendered)) + ":"


# --- address derivation ----------------------------------------------------

# chain id -> (curve, namespace); unlisted chains default to EVM
CHAIN_NAMESPACES: Dict[str, Tuple[Curve, AddressNamespace]] = {
    "solana": (Curve.ED25519, AddressNamespace.ED25519_CHAIN),
}
_DEFAULT_NAMESPACE = (Curve.SECP256K1, AddressNamespace.EVM)


def _chain_curve(chain: str) -> Tuple[Curve, AddressNamespace]:
    return CHAIN_NAMESPACES.get(chain, _DEFAULT_NAMESPACE)


def derive_address_for_context(root: IdentityRoot, chain: str, ctx: str) -> str:
    curve, namespace = _chain_curve(chain)
    return address_for(derive_contextual_keypair(root, curve, ctx), namespace)


def vault_address(root: IdentityRoot, agent_id: str, chain: str) -> str:
    """The agent's main (transparent-level) address: identity-derived,
    no transaction context."""
    return derive_address_for_context(root, chain, build_context({"agent": agent_id}))


def derive_address(
    root: IdentityRoot,
    level: PrivacyLevel,
    agent_id: str,
    direction: Direction,
    chain: str,
    tx_id: Optional[str] = None,
    seq: Optional[int] = None,
) -> str:
    if level is PrivacyLevel.TRANSPARENT:
        return vault_address(root, agent_id, chain)
    if level is PrivacyLevel.BASIC:
        ctx = build_context(
            {"agent": agent_id, "dir": direction.value, "mode": "basic"}
        )
        return derive_address_for_context(root, chain, ctx)
    if tx_id is None:
        raise PrivacyError("isolated level requires a tx_id")
    ctx = build_context(
        {
            "agent": agent_id,
            "dir": direction.value,
            "seq": str(seq if seq is not None else 0),
            "tx": tx_id,
        }
    )
    return derive_address_for_context(root, chain, ctx)


# --- address pool ------------------------------------------------------------


class AddressStatus(str, Enum):
    POOLED = "pooled"
    CLAIMED = "claimed"
    SPENT = "spent"
    CONSOLIDATED = "consolidated"


_STATUS_ORDER = [
    AddressStatus.POOLED,
    AddressStatus.CLAIMED,
    AddressStatus.SPENT,
    AddressStatus.CONSOLIDATED,
]


@dataclass
class EphemeralAddressRecord:
    address: str
    chain_namespace: str
    context_string: str
    derived_at: int
    status: AddressStatus = AddressStatus.POOLED
    claimed_tx: Optional[str] = None

    def advance_status(self, new_status: AddressStatus) -> None:
        if _STATUS_ORDER.index(new_status) != _STATUS_ORDER.index(self.status) + 1:
            raise PrivacyError(
                f"invalid status transition {self.status.value} -> {new_status.value}"
            )
        self.status = new_status


class AddressPoolManager:
    """Pre-derived ephemeral addresses, one pool per (agent, chain, dir).

    Pool contexts use the `pool:pre` segment with a monotonically
    increasing sequence; a claimed address keeps its pool derivation
    context and the claim is mapped at tag level via claimed_tx.
    """

    def __init__(self, root: IdentityRoot, pool_size: int = ADDRESS_POOL_SIZE):
        self.root = root
        self.pool_size = pool_size
        self._pools: Dict[tuple, List[EphemeralAddressRecord]] = {}
        self._sequences: Dict[tuple, int] = {}
        self._all_records: List[EphemeralAddressRecord] = []
        self._locks: Dict[tuple, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock_for(self, key: tuple) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(key, threading.Lock())

    def _derive_one(self, agent_id: str, chain: str, direction: Direction,
                    key: tuple, now: int) -> EphemeralAddressRecord:
        seq = self._sequences.get(key, 0) + 1
        self._sequences[key] = seq
        ctx = build_context(
            {
                "agent": agent_id,
                "dir": direction.value,
                "pool": "pre",
                "seq": str(seq),
            }
        )
        record = EphemeralAddressRecord(
            address=derive_address_for_context(self.root, chain, ctx),
            chain_namespace=_chain_curve(chain)[1].value,
            context_string=ctx,
            derived_at=now,
        )
        self._all_records.append(record)
        return record

    def initialize(self, agent_id: str, chain: str, direction: Direction,
                   now: int = 0) -> int:
        return self.replenish(agent_id, chain, direction, now)

    def replenish(self, agent_id: str, chain: str, direction: Direction,
                  now: int = 0) -> int:
        """Top the pool back up to pool_size; returns how many were derived."""
        key = (agent_id, chain, direction)
        with self._lock_for(key):
            pool = self._pools.setdefault(key, [])
            added = 0
            while len(pool) < self.pool_size:
                pool.append(self._derive_one(agent_id, chain, direction, key, now))
                added += 1
            return added

    def claim(self, agent_id: str, chain: str, direction: Direction,
              tx_id: str, now: int = 0, *,
              replenish: bool = True) -> EphemeralAddressRecord:
        key = (agent_id, chain, direction)
        with self._lock_for(key):
            pool = self._pools.get(key)
            if not pool:
                raise PoolExhausted(f"no pooled addresses for {key}")
            record = pool.pop(0)
            record.advance_status(AddressStatus.CLAIMED)
            record.claimed_tx = tx_id
        if replenish:
            self.replenish(agent_id, chain, direction, now)
        return record

    def pool_size_for(self, agent_id: str, chain: str, direction: Direction) -> int:
        return len(self._pools.get((agent_id, chain, direction), ()))

    def sequence_for(self, agent_id: str, chain: str, direction: Direction) -> int:
        return self._sequences.get((agent_id, chain, direction), 0)

    def status_counts(self) -> Dict[AddressStatus, int]:
        counts = {status: 0 for status in AddressStatus}
        for record in self._all_records:
            counts[record.status] += 1
        return counts

    @property
    def total_derived(self) -> int:
        return len(self._all_records)


# --- consolidation -----------------------------------------------------------


def next_consolidation_delay(base_ms: int, jitter_ratio: float, rng_draw: float) -> int:
    """base * (1 - rho + 2*rho*r) for r in [0, 1)."""
    if not 0 <= jitter_ratio < 1:
        raise ValueError("jitter_ratio must be in [0, 1)")
    return int(base_ms * (1 - jitter_ratio + 2 * jitter_ratio * rng_draw))


def fisher_yates_shuffle(items: list, rng) -> list:
    """In-place Fisher-Yates: i from n-1 down to 1, j uniform in [0, i]."""
    for i in range(len(items) - 1, 0, -1):
        j = rng.randint(0, i)
        items[i], items[j] = items[j], items[i]
    return items


@dataclass(frozen=True)
class ConsolidationPlan:
    batches: Tuple[Tuple[str, ...], ...]
    inter_batch_delays_ms: Tuple[int, ...]
    scheduled_at: int


def plan_consolidation(
    records: List[EphemeralAddressRecord],
    rng,
    now: int,
    batch_size: int = CONSOLIDATION_BATCH_SIZE,
) -> ConsolidationPlan:
    """Shuffle spent addresses, chunk into batches, and draw uniform
    inter-batch delays in [10, 60] minutes."""
    for record in records:
        if record.status is not AddressStatus.SPENT:
            raise PrivacyError(f"address {record.address} is not spent")
    addresses = [r.address for r in records]
    fisher_yates_shuffle(addresses, rng)
    batches = tuple(
        tuple(addresses[i:i + batch_size])
        for i in range(0, len(addresses), batch_size)
    )
    delays = tuple(
        rng.randint(INTER_BATCH_DELAY_MIN_MS, INTER_BATCH_DELAY_MAX_MS)
        for _ in range(max(len(batches) - 1, 0))
    )
    return ConsolidationPlan(batches, delays, now)


def execute_consolidation(
    plan: ConsolidationPlan, records: List[EphemeralAddressRecord]
) -> None:
    """Mark records consolidated in batch order."""
    by_address = {r.address: r for r in records}
    for batch in plan.batches:
        for address in batch:
            by_address[address].advance_status(AddressStatus.CONSOLIDATED)


# --- audit tags --------------------------------------------------------------

AUDIT_TAG_CONTEXT = "audit:tags:v1"


class ArchiveStrategy(str, Enum):
    IMMEDIATE = "immediate"
    TIME_WINDOW = "time_window"
    COUNT_THRESHOLD = "count_threshold"


@dataclass
class ContextTag:
    tag_id: str
    agent_id: str
    policy_id: str
    ephemeral_address: str
    created_at: int
    commitment_id: Optional[str] = None
    metadata: Dict[str, str] = field(default_factory=dict)
    ciphertext: Optional[dict] = None  # sealed blob fields, hex-encoded

    def plaintext_fields(self) -> dict:
        return {
            "tag_id": self.tag_id,
            "agent_id": self.agent_id,
            "policy_id": self.policy_id,
            "commitment_id": self.commitment_id,
            "ephemeral_address": self.ephemeral_address,
            "metadata": dict(self.metadata),
            "created_at": self.created_at,
        }


class ArchiveSink:
    """append-only archive of encrypted tag batches."""

    def append(self, batch: List[dict]) -> None:
        raise NotImplementedError


class InMemoryArchive(ArchiveSink):
    def __init__(self):
        self.batches: List[List[dict]] = []

    def append(self, batch: List[dict]) -> None:
        self.batches.append(list(batch))


class FileArchive(ArchiveSink):
    """One JSON-lines file per UTC day under the given directory."""

    def __init__(self, directory):
        import pathlib

        self.directory = pathlib.Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def append(self, batch: List[dict]) -> None:
        import datetime

        day = datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%d")
        with open(self.directory / f"tags-{day}.jsonl", "a") as handle:
            handle.write(json.dumps(batch) + "\n")


class ContextTagManager:
    """Creates AEAD-sealed audit tags and archives them per strategy.

    The audit key passphrase is derived from the identity root under a
    dedicated audit context, so only the owner can decrypt tags.
    """

    def __init__(
        self,
        root: IdentityRoot,
        sink: ArchiveSink,
        strategy: ArchiveStrategy = ArchiveStrategy.IMMEDIATE,
        *,
        window_ms: int = AUDIT_TIME_WINDOW_MS,
        threshold: int = AUDIT_BATCH_THRESHOLD,
    ):
        audit_kp = derive_contextual_keypair(root, Curve.ED25519, AUDIT_TAG_CONTEXT)
        # stable owner-only passphrase for tag sealing
        self._audit_passphrase = sha256(
            b"aesp:audit-seal:" + audit_kp.public_key
        ).hex()
        self.sink = sink
        self.strategy = strategy
        self.window_ms = window_ms
        self.threshold = threshold
        self._pending: List[dict] = []
        self._first_pending_at: Optional[int] = None
        self._lock = threading.Lock()

    def _seal(self, tag: ContextTag) -> dict:
        blob = seal_secret(
            canonical_json(tag.plaintext_fields()), self._audit_passphrase
        )
        return {
            "tag_id": tag.tag_id,
            "version": blob.version,
            "algorithm": blob.algorithm,
            "salt": blob.salt.hex(),
            "nonce": blob.nonce.hex(),
            "ciphertext": blob.ciphertext.hex(),
        }

    def decrypt_tag(self, sealed: dict) -> dict:
        from .crypto import SealedBlob

        blob = SealedBlob(
            version=sealed["version"],
            algorithm=sealed["algorithm"],
            salt=bytes.fromhex(sealed["salt"]),
            nonce=bytes.fromhex(sealed["nonce"]),
            ciphertext=bytes.fromhex(sealed["ciphertext"]),
        )
        return json.loads(unseal_secret(blob, self._audit_passphrase))

    def create_tag(
        self,
        agent_id: str,
        policy_id: str,
        ephemeral_address: str,
        now: int,
        commitment_id: Optional[str] = None,
        metadata: Optional[Dict[str, str]] = None,
    ) -> ContextTag:
        tag = ContextTag(
            tag_id=str(uuid.uuid4()),
            agent_id=agent_id,
            policy_id=policy_id,
            commitment_id=commitment_id,
            ephemeral_address=ephemeral_address,
            metadata=dict(metadata or {}),
            created_at=now,
        )
        sealed = self._seal(tag)
        tag.ciphertext = sealed
        with self._lock:
            if self.strategy is ArchiveStrategy.IMMEDIATE:
                self.sink.append([sealed])
            else:
                self._pending.append(sealed)
                if self._first_pending_at is None:
                    self._first_pending_at = now
                if (
                    self.strategy is ArchiveStrategy.COUNT_THRESHOLD
                    and len(self._pending) >= self.threshold
                ):
                    self._flush()
        return tag

    def sweep(self, now: int) -> bool:
        """Flush the time-window batch when the window has elapsed."""
        with self._lock:
            if (
                self.strategy is ArchiveStrategy.TIME_WINDOW
                and self._pending
                and self._first_pending_at is not None
                and now >= self._first_pending_at + self.window_ms
            ):
                self._flush()
                return True
        return False

    def _flush(self) -> None:
        self.sink.append(self._pending)
        self._pending = []
        self._first_pending_at = None

    @property
    def pending_count(self) -> int:
        return len(self._pending)
