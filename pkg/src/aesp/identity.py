"""Agent identity derivation, owner-signed certificates, and the
delegation hierarchy with escalation chains."""

from __future__ import annotations

import dataclasses
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Set

from .constants import MAX_HIERARCHY_DEPTH
from .crypto import (
    Curve,
    DerivedKeypair,
    IdentityRoot,
    canonical_json,
    derive_contextual_keypair,
    sha256,
    sign,
    verify,
)

ROOT_SENTINEL = "0" * 64  # the human principal


class Capability(str, Enum):
    PAYMENT = "payment"
    NEGOTIATION = "negotiation"
    DATA_QUERY = "data_query"
    COMMITMENT = "commitment"
    DELEGATION = "delegation"
    ARBITRATION = "arbitration"


ALL_CAPABILITIES: FrozenSet[Capability] = frozenset(Capability)


class HierarchyError(Exception):
    pass


class DepthExceeded(HierarchyError):
    pass


class CapabilityEscalation(HierarchyError):
    pass


class UnknownParent(HierarchyError):
    pass


class CertVerdict(str, Enum):
    VALID = "valid"
    EXPIRED = "expired"
    SIGNATURE_INVALID = "signature_invalid"
    UNTRUSTED_OWNER = "untrusted_owner"


@dataclass(frozen=True)
class AgentIdentity:
    index: int
    agent_id: str  # 64-char lowercase hex
    did: str
    public_key: bytes
    keypair: DerivedKeypair = field(repr=False, compare=False)


def derive_agent(root: IdentityRoot, index: int) -> AgentIdentity:
    if index < 0:
        raise ValueError("agent index must be non-negative")
    kp = derive_contextual_keypair(root, Curve.ED25519, f"agent-identity:{index}:")
    agent_id = sha256(kp.public_key).hex()
    return AgentIdentity(
        index=index,
        agent_id=agent_id,
        did=f"did:aesp:{agent_id}",
        public_key=kp.public_key,
        keypair=kp,
    )


@dataclass(frozen=True)
class IdentityCertificate:
    version: str
    agent_id: str
    agent_public_key: bytes
    owner_xid: bytes  # owner ed25519 public key
    capabilities: FrozenSet[Capability]
    policy_hash: bytes
    max_autonomous_amount: int  # micro-units
    chains: tuple
    created_at: int
    expires_at: int
    owner_signature: bytes

    def signing_payload(self) -> bytes:
        return canonical_json(self._field_map())

    def _field_map(self) -> dict:
        return {
            "version": self.version,
            "agent_id": self.agent_id,
            "agent_public_key": self.agent_public_key.hex(),
            "owner_xid": self.owner_xid.hex(),
            "capabilities": sorted(c.value for c in self.capabilities),
            "policy_hash": self.policy_hash.hex(),
            "max_autonomous_amount": self.max_autonomous_amount,
            "chains": list(self.chains),
            "created_at": self.created_at,
            "expires_at": self.expires_at,
        }

    def to_json_dict(self) -> dict:
        data = self._field_map()
        data["owner_signature"] = self.owner_signature.hex()
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> "IdentityCertificate":
        return cls(
            version=data["version"],
            agent_id=data["agent_id"],
            agent_public_key=bytes.fromhex(data["agent_public_key"]),
            owner_xid=bytes.fromhex(data["owner_xid"]),
            capabilities=frozenset(Capability(c) for c in data["capabilities"]),
            policy_hash=bytes.fromhex(data["policy_hash"]),
            max_autonomous_amount=data["max_autonomous_amount"],
            chains=tuple(data["chains"]),
            created_at=data["created_at"],
            expires_at=data["expires_at"],
            owner_signature=bytes.fromhex(data["owner_signature"]),
        )


def issue_certificate(
    owner_kp: DerivedKeypair,
    agent: AgentIdentity,
    capabilities: Set[Capability],
    policy_json: dict,
    max_amount: int,
    chains: List[str],
    validity_ms: int,
    now: int,
) -> IdentityCertificate:
    if validity_ms <= 0:
        raise ValueError("validity_ms must be positive")
    unsigned = IdentityCertificate(
        version="1.0",
        agent_id=agent.agent_id,
        agent_public_key=agent.public_key,
        owner_xid=owner_kp.public_key,
        capabilities=frozenset(capabilities),
        policy_hash=sha256(canonical_json(policy_json)),
        max_autonomous_amount=max_amount,
        chains=tuple(chains),
        created_at=now,
        expires_at=now + validity_ms,
        owner_signature=b"",
    )
    signature = sign(owner_kp, unsigned.signing_payload())
    return dataclasses.replace(unsigned, owner_signature=signature)


def verify_certificate(
    cert: IdentityCertificate, trusted_owner_xid: bytes, now: int
) -> CertVerdict:
    if cert.owner_xid != trusted_owner_xid:
        return CertVerdict.UNTRUSTED_OWNER
    if not verify(
        Curve.ED25519, cert.owner_xid, cert.signing_payload(), cert.owner_signature
    ):
        return CertVerdict.SIGNATURE_INVALID
    if now >= cert.expires_at:  # expiry boundary is exclusive
        return CertVerdict.EXPIRED
    return CertVerdict.VALID


@dataclass(frozen=True)
class HierarchyNode:
    agent_id: str
    parent_id: str
    depth: int
    capabilities: FrozenSet[Capability]


class HierarchyManager:
    """Delegation forest rooted at the human principal (ROOT_SENTINEL).

    Mutations are serialized; depth is capped at MAX_HIERARCHY_DEPTH and
    children may only hold a subset of their parent's capabilities.
    """

    def __init__(self):
        self._nodes: Dict[str, HierarchyNode] = {}
        self._lock = threading.Lock()

    def add_child(
        self,
        parent_id: str,
        child: AgentIdentity,
        capabilities: Set[Capability],
    ) -> HierarchyNode:
        capabilities = frozenset(capabilities)
        with self._lock:
            if child.agent_id in self._nodes:
                raise HierarchyError(f"agent {child.agent_id} already in hierarchy")
            if parent_id == ROOT_SENTINEL:
                depth = 1
                parent_caps = ALL_CAPABILITIES
            else:
                parent = self._nodes.get(parent_id)
                if parent is None:
                    raise UnknownParent(f"unknown parent {parent_id}")
                depth = parent.depth + 1
                parent_caps = parent.capabilities
            if depth > MAX_HIERARCHY_DEPTH:
                raise DepthExceeded(
                    f"depth {depth} exceeds maximum {MAX_HIERARCHY_DEPTH}"
                )
            if not capabilities <= parent_caps:
                raise CapabilityEscalation(
                    "child capabilities exceed parent's grant"
                )
            node = HierarchyNode(child.agent_id, parent_id, depth, capabilities)
            self._nodes[child.agent_id] = node
            return node

    def get(self, agent_id: str) -> Optional[HierarchyNode]:
        return self._nodes.get(agent_id)

    def escalation_chain(self, agent_id: str) -> List[str]:
        """Ordered path [agent, parent, ..., ROOT]."""
        chain = []
        current = agent_id
        while current != ROOT_SENTINEL:
            node = self._nodes.get(current)
            if node is None:
                raise HierarchyError(f"agent {current} not in hierarchy")
            chain.append(current)
            current = node.parent_id
        chain.append(ROOT_SENTINEL)
        return chain
