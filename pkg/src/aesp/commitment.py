"""EIP-712 typed-data commitments: construction, canonical hashing,
dual-signature collection, and the 9-state lifecycle.

Two hashes coexist on purpose: `commitment_hash` (SHA-256 of the canonical
JSON of domain+value — the record's identity) and the EIP-712 digest
(Keccak-based, what is actually signed).
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from .constants import EIP712_DOMAIN_NAME, EIP712_DOMAIN_VERSION
from .crypto import (
    IdentityRoot,
    canonical_json,
    keccak_256,
    recover_signer_address,
    sha256,
    sign_typed_data_with_context,
)

_ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")

COMMITMENT_TYPE_STRING = (
    "Commitment(address buyerAgent,address sellerAgent,string item,"
    "uint256 price,address currency,uint256 deliveryDeadline,"
    "address arbitrator,bool escrowRequired,uint256 nonce)"
)
_DOMAIN_TYPE_STRING = "EIP712Domain(string name,string version,uint256 chainId)"


class CommitmentError(Exception):
    pass


class InvalidAddress(CommitmentError):
    pass


class WrongState(CommitmentError):
    pass


class SignerMismatch(CommitmentError):
    pass


class InvalidLifecycleTransition(CommitmentError):
    pass


class CommitmentState(str, Enum):
    DRAFT = "draft"
    PROPOSED = "proposed"
    BUYER_SIGNED = "buyer_signed"
    FULLY_SIGNED = "fully_signed"
    ESCROWED = "escrowed"
    DELIVERED = "delivered"
    COMPLETED = "completed"
    DISPUTED = "disputed"
    CANCELLED = "cancelled"


class Role(str, Enum):
    BUYER = "buyer"
    SELLER = "seller"


class LifecycleEvent(str, Enum):
    ESCROW_FUNDED = "escrow_funded"
    DELIVERED = "delivered"
    RELEASED = "released"
    DISPUTE = "dispute"
    CANCEL = "cancel"


_PRE_ESCROW = (
    CommitmentState.DRAFT,
    CommitmentState.PROPOSED,
    CommitmentState.BUYER_SIGNED,
    CommitmentState.FULLY_SIGNED,
)

ADVANCE_TRANSITIONS: Dict[Tuple[CommitmentState, LifecycleEvent], CommitmentState] = {
    (CommitmentState.FULLY_SIGNED, LifecycleEvent.ESCROW_FUNDED): CommitmentState.ESCROWED,
    (CommitmentState.ESCROWED, LifecycleEvent.DELIVERED): CommitmentState.DELIVERED,
    (CommitmentState.DELIVERED, LifecycleEvent.RELEASED): CommitmentState.COMPLETED,
    (CommitmentState.ESCROWED, LifecycleEvent.DISPUTE): CommitmentState.DISPUTED,
    (CommitmentState.DELIVERED, LifecycleEvent.DISPUTE): CommitmentState.DISPUTED,
    **{(s, LifecycleEvent.CANCEL): CommitmentState.CANCELLED for s in _PRE_ESCROW},
}


@dataclass(frozen=True)
class CommitmentValue:
    buyer_agent: str
    seller_agent: str
    item: str
    price: str  # uint256 as decimal string
    currency: str
    delivery_deadline: int  # seconds epoch
    arbitrator: str
    escrow_required: bool
    nonce: str  # uint256 as decimal string, nonzero

    def __post_init__(self):
        for name in ("buyer_agent", "seller_agent", "currency", "arbitrator"):
            value = getattr(self, name)
            if not _ADDRESS_RE.match(value):
                raise InvalidAddress(f"{name} is not a 20-byte 0x-hex address: {value}")
        if int(self.nonce) == 0:
            raise CommitmentError("nonce must be nonzero")

    def to_json_dict(self) -> dict:
        return {
            "buyer_agent": self.buyer_agent,
            "seller_agent": self.seller_agent,
            "item": self.item,
            "price": self.price,
            "currency": self.currency,
            "delivery_deadline": self.delivery_deadline,
            "arbitrator": self.arbitrator,
            "escrow_required": self.escrow_required,
            "nonce": self.nonce,
        }


@dataclass(frozen=True)
class CommitmentRecord:
    value: CommitmentValue
    chain_id: int
    state: CommitmentState
    commitment_hash: bytes
    buyer_signature: Optional[bytes] = None
    seller_signature: Optional[bytes] = None
    agreement_hash: Optional[bytes] = None
    metadata: Dict[str, str] = field(default_factory=dict)

    @property
    def domain(self) -> dict:
        return {
            "name": EIP712_DOMAIN_NAME,
            "version": EIP712_DOMAIN_VERSION,
            "chain_id": self.chain_id,
        }

    def to_json_dict(self) -> dict:
        """Canonical export: the hand-off artifact to a settlement layer."""
        return {
            "domain": self.domain,
            "value": self.value.to_json_dict(),
            "state": self.state.value,
            "commitment_hash": self.commitment_hash.hex(),
            "buyer_signature": self.buyer_signature.hex() if self.buyer_signature else None,
            "seller_signature": self.seller_signature.hex() if self.seller_signature else None,
            "agreement_hash": self.agreement_hash.hex() if self.agreement_hash else None,
            "metadata": dict(self.metadata),
        }


def build(
    chain_id: int,
    value: CommitmentValue,
    agreement_hash: Optional[bytes] = None,
) -> CommitmentRecord:
    domain = {
        "name": EIP712_DOMAIN_NAME,
        "version": EIP712_DOMAIN_VERSION,
        "chain_id": chain_id,
    }
    commitment_hash = sha256(
        canonical_json({"domain": domain, "value": value.to_json_dict()})
    )
    return CommitmentRecord(
        value=value,
        chain_id=chain_id,
        state=CommitmentState.DRAFT,
        commitment_hash=commitment_hash,
        agreement_hash=agreement_hash,
    )


def _encode_address(address: str) -> bytes:
    return bytes.fromhex(address[2:]).rjust(32, b"\x00")


def _encode_uint(value: int) -> bytes:
    return int(value).to_bytes(32, "big")


def eip712_digest(record: CommitmentRecord) -> bytes:
    """keccak256("\\x19\\x01" || domainSeparator || structHash)."""
    domain_separator = keccak_256(
        keccak_256(_DOMAIN_TYPE_STRING.encode("ascii"))
        + keccak_256(EIP712_DOMAIN_NAME.encode("utf-8"))
        + keccak_256(EIP712_DOMAIN_VERSION.encode("utf-8"))
        + _encode_uint(record.chain_id)
    )
    v = record.value
    struct_hash = keccak_256(
        keccak_256(COMMITMENT_TYPE_STRING.encode("ascii"))
        + _encode_address(v.buyer_agent)
        + _encode_address(v.seller_agent)
        + keccak_256(v.item.encode("utf-8"))
        + _encode_uint(int(v.price))
        + _encode_address(v.currency)
        + _encode_uint(v.delivery_deadline)
        + _encode_address(v.arbitrator)
        + _encode_uint(1 if v.escrow_required else 0)
        + _encode_uint(int(v.nonce))
    )
    return keccak_256(b"\x19\x01" + domain_separator + struct_hash)


def propose(record: CommitmentRecord) -> CommitmentRecord:
    if record.state is not CommitmentState.DRAFT:
        raise WrongState(f"cannot propose from {record.state.value}")
    return dataclasses.replace(record, state=CommitmentState.PROPOSED)


def sign_as(
    record: CommitmentRecord, role: Role, root: IdentityRoot, ctx: str
) -> CommitmentRecord:
    """Buyer signs first (draft/proposed -> buyer_signed), then the seller
    (buyer_signed -> fully_signed). The recovered signer must equal the
    role's address declared in the commitment value."""
    if role is Role.BUYER:
        if record.buyer_signature is not None:
            raise WrongState("buyer signature already present")
        if record.state not in (CommitmentState.DRAFT, CommitmentState.PROPOSED):
            raise WrongState(f"buyer cannot sign in state {record.state.value}")
        expected = record.value.buyer_agent
    else:
        if record.seller_signature is not None:
            raise WrongState("seller signature already present")
        if record.state is not CommitmentState.BUYER_SIGNED:
            raise WrongState(f"seller cannot sign in state {record.state.value}")
        expected = record.value.seller_agent

    digest = eip712_digest(record)
    signature = sign_typed_data_with_context(root, ctx, digest)
    recovered = recover_signer_address(digest, signature)
    if recovered.lower() != expected.lower():
        raise SignerMismatch(
            f"recovered {recovered} does not match declared {role.value} {expected}"
        )
    if role is Role.BUYER:
        return dataclasses.replace(
            record,
            buyer_signature=signature,
            state=CommitmentState.BUYER_SIGNED,
        )
    return dataclasses.replace(
        record,
        seller_signature=signature,
        state=CommitmentState.FULLY_SIGNED,
    )


def verify_signatures(record: CommitmentRecord) -> bool:
    """Both stored signatures must recover to the declared parties."""
    digest = eip712_digest(record)
    if record.buyer_signature is not None:
        if recover_signer_address(digest, record.buyer_signature).lower() \
                != record.value.buyer_agent.lower():
            return False
    if record.seller_signature is not None:
        if recover_signer_address(digest, record.seller_signature).lower() \
                != record.value.seller_agent.lower():
            return False
    return True


def advance(
    record: CommitmentRecord,
    event: LifecycleEvent,
    metadata: Optional[Dict[str, str]] = None,
) -> CommitmentRecord:
    target = ADVANCE_TRANSITIONS.get((record.state, event))
    if target is None:
        raise InvalidLifecycleTransition(
            f"no transition from {record.state.value} on {event.value}"
        )
    merged = dict(record.metadata)
    if metadata:
        merged.update(metadata)
    return dataclasses.replace(record, state=target, metadata=merged)
