"""Typed-data commitments: EIP-712 digest oracle, dual-signature collection,
and exhaustive lifecycle enumeration."""

import dataclasses

import pytest

from aesp.commitment import (
    ADVANCE_TRANSITIONS,
    COMMITMENT_TYPE_STRING,
    CommitmentError,
    CommitmentRecord,
    CommitmentState,
    CommitmentValue,
    InvalidAddress,
    InvalidLifecycleTransition,
    LifecycleEvent,
    Role,
    SignerMismatch,
    WrongState,
    advance,
    build,
    eip712_digest,
    propose,
    sign_as,
    verify_signatures,
)
from aesp.constants import EIP712_DOMAIN_NAME, EIP712_DOMAIN_VERSION
from aesp.crypto import contextual_evm_address, keccak_256

BUYER_CTX = "commitment:test:buyer:"
SELLER_CTX = "commitment:test:seller:"
CHAIN_ID = 8453


@pytest.fixture(scope="module")
def value(root):
    return CommitmentValue(
        buyer_agent=contextual_evm_address(root, BUYER_CTX),
        seller_agent=contextual_evm_address(root, SELLER_CTX),
        item="dataset-license-42",
        price="92000000",
        currency="0x" + "aa" * 20,
        delivery_deadline=1_767_225_600,
        arbitrator="0x" + "bb" * 20,
        escrow_required=True,
        nonce="7",
    )


# --- construction and validation ---------------------------------------------


def test_value_rejects_malformed_addresses():
    with pytest.raises(InvalidAddress):
        CommitmentValue(
            buyer_agent="0x1234",
            seller_agent="0x" + "cc" * 20,
            item="x",
            price="1",
            currency="0x" + "aa" * 20,
            delivery_deadline=1,
            arbitrator="0x" + "bb" * 20,
            escrow_required=False,
            nonce="1",
        )


def test_value_rejects_zero_nonce(value):
    with pytest.raises(CommitmentError):
        dataclasses.replace(value, nonce="0")


def test_build_starts_in_draft_with_stable_hash(value):
    a = build(CHAIN_ID, value)
    b = build(CHAIN_ID, value)
    assert a.state is CommitmentState.DRAFT
    assert a.commitment_hash == b.commitment_hash
    assert build(1, value).commitment_hash != a.commitment_hash
    other = dataclasses.replace(value, price="92000001")
    assert build(CHAIN_ID, other).commitment_hash != a.commitment_hash


# --- independent EIP-712 digest oracle ---------------------------------------


def _oracle_digest(value, chain_id):
    """Re-encodes the typed data from the EIP-712 rules, independently of
    the package's encoder (shares only the keccak primitive, which is
    itself pinned to published test vectors)."""

    def addr(a):
        return bytes(12) + bytes.fromhex(a[2:])

    def uint(n):
        return n.to_bytes(32, "big")

    domain_separator = keccak_256(
        keccak_256(b"EIP712Domain(string name,string version,uint256 chainId)")
        + keccak_256(EIP712_DOMAIN_NAME.encode())
        + keccak_256(EIP712_DOMAIN_VERSION.encode())
        + uint(chain_id)
    )
    struct_hash = keccak_256(
        keccak_256(COMMITMENT_TYPE_STRING.encode())
        + addr(value.buyer_agent)
        + addr(value.seller_agent)
        + keccak_256(value.item.encode())
        + uint(int(value.price))
        + addr(value.currency)
        + uint(value.delivery_deadline)
        + addr(value.arbitrator)
        + uint(1 if value.escrow_required else 0)
        + uint(int(value.nonce))
    )
    return keccak_256(b"\x19\x01" + domain_separator + struct_hash)


def test_eip712_digest_matches_independent_encoding(value):
    record = build(CHAIN_ID, value)
    assert eip712_digest(record) == _oracle_digest(value, CHAIN_ID)


def test_eip712_digest_sensitive_to_every_field(value):
    base = eip712_digest(build(CHAIN_ID, value))
    variants = [
        dataclasses.replace(value, item="other-item"),
        dataclasses.replace(value, price="1"),
        dataclasses.replace(value, delivery_deadline=2),
        dataclasses.replace(value, escrow_required=False),
        dataclasses.replace(value, nonce="8"),
        dataclasses.replace(value, arbitrator="0x" + "cd" * 20),
    ]
    digests = {eip712_digest(build(CHAIN_ID, v)) for v in variants}
    assert base not in digests
    assert len(digests) == len(variants)
    assert eip712_digest(build(CHAIN_ID + 1, value)) != base


# --- dual-signature collection ------------------------------------------------


def test_happy_path_buyer_then_seller(root, value):
    record = propose(build(CHAIN_ID, value))
    assert record.state is CommitmentState.PROPOSED
    record = sign_as(record, Role.BUYER, root, BUYER_CTX)
    assert record.state is CommitmentState.BUYER_SIGNED
    assert record.buyer_signature is not None
    record = sign_as(record, Role.SELLER, root, SELLER_CTX)
    assert record.state is CommitmentState.FULLY_SIGNED
    assert verify_signatures(record)


def test_seller_cannot_sign_first(root, value):
    record = propose(build(CHAIN_ID, value))
    with pytest.raises(WrongState):
        sign_as(record, Role.SELLER, root, SELLER_CTX)


def test_double_signing_rejected(root, value):
    record = sign_as(build(CHAIN_ID, value), Role.BUYER, root, BUYER_CTX)
    with pytest.raises(WrongState):
        sign_as(record, Role.BUYER, root, BUYER_CTX)


def test_signer_mismatch_raises(root, value):
    record = build(CHAIN_ID, value)
    with pytest.raises(SignerMismatch):
        sign_as(record, Role.BUYER, root, "commitment:test:imposter:")


def test_tampered_value_breaks_verification(root, value):
    record = sign_as(build(CHAIN_ID, value), Role.BUYER, root, BUYER_CTX)
    record = sign_as(record, Role.SELLER, root, SELLER_CTX)
    tampered = dataclasses.replace(
        record, value=dataclasses.replace(value, price="1")
    )
    assert not verify_signatures(tampered)


def test_swapped_signatures_fail_verification(root, value):
    record = sign_as(build(CHAIN_ID, value), Role.BUYER, root, BUYER_CTX)
    record = sign_as(record, Role.SELLER, root, SELLER_CTX)
    swapped = dataclasses.replace(
        record,
        buyer_signature=record.seller_signature,
        seller_signature=record.buyer_signature,
    )
    assert not verify_signatures(swapped)


def test_propose_only_from_draft(value):
    record = propose(build(CHAIN_ID, value))
    with pytest.raises(WrongState):
        propose(record)


# --- lifecycle enumeration -----------------------------------------------------


def _fully_signed(root, value):
    record = sign_as(build(CHAIN_ID, value), Role.BUYER, root, BUYER_CTX)
    return sign_as(record, Role.SELLER, root, SELLER_CTX)


def _at_state(root, value, state):
    paths = {
        CommitmentState.DRAFT: [],
        CommitmentState.ESCROWED: [LifecycleEvent.ESCROW_FUNDED],
        CommitmentState.DELIVERED: [
            LifecycleEvent.ESCROW_FUNDED, LifecycleEvent.DELIVERED,
        ],
        CommitmentState.COMPLETED: [
            LifecycleEvent.ESCROW_FUNDED, LifecycleEvent.DELIVERED,
            LifecycleEvent.RELEASED,
        ],
        CommitmentState.DISPUTED: [
            LifecycleEvent.ESCROW_FUNDED, LifecycleEvent.DISPUTE,
        ],
        CommitmentState.CANCELLED: [LifecycleEvent.CANCEL],
    }
    if state is CommitmentState.DRAFT:
        return build(CHAIN_ID, value)
    if state is CommitmentState.PROPOSED:
        return propose(build(CHAIN_ID, value))
    if state is CommitmentState.BUYER_SIGNED:
        return sign_as(build(CHAIN_ID, value), Role.BUYER, root, BUYER_CTX)
    record = _fully_signed(root, value)
    if state is CommitmentState.FULLY_SIGNED:
        return record
    if state is CommitmentState.CANCELLED:
        return advance(build(CHAIN_ID, value), LifecycleEvent.CANCEL)
    for event in paths[state]:
        record = advance(record, event)
    assert record.state is state
    return record


# Independently enumerated legal lifecycle moves: escrow funding after both
# signatures, delivery, release, dispute from active escrow, and cancellation
# anywhere before escrow.
LIFECYCLE_LEGAL = {
    (CommitmentState.FULLY_SIGNED, LifecycleEvent.ESCROW_FUNDED):
        CommitmentState.ESCROWED,
    (CommitmentState.ESCROWED, LifecycleEvent.DELIVERED):
        CommitmentState.DELIVERED,
    (CommitmentState.DELIVERED, LifecycleEvent.RELEASED):
        CommitmentState.COMPLETED,
    (CommitmentState.ESCROWED, LifecycleEvent.DISPUTE):
        CommitmentState.DISPUTED,
    (CommitmentState.DELIVERED, LifecycleEvent.DISPUTE):
        CommitmentState.DISPUTED,
    (CommitmentState.DRAFT, LifecycleEvent.CANCEL): CommitmentState.CANCELLED,
    (CommitmentState.PROPOSED, LifecycleEvent.CANCEL): CommitmentState.CANCELLED,
    (CommitmentState.BUYER_SIGNED, LifecycleEvent.CANCEL):
        CommitmentState.CANCELLED,
    (CommitmentState.FULLY_SIGNED, LifecycleEvent.CANCEL):
        CommitmentState.CANCELLED,
}


def test_lifecycle_exhaustive_enumeration(root, value):
    legal_seen = 0
    for state in CommitmentState:
        for event in LifecycleEvent:
            record = _at_state(root, value, state)
            if (state, event) in LIFECYCLE_LEGAL:
                after = advance(record, event)
                assert after.state is LIFECYCLE_LEGAL[(state, event)]
                legal_seen += 1
            else:
                with pytest.raises(InvalidLifecycleTransition):
                    advance(record, event)
    assert legal_seen == 9
    assert len(CommitmentState) * len(LifecycleEvent) == 45
    assert ADVANCE_TRANSITIONS == LIFECYCLE_LEGAL


def test_escrow_requires_both_signatures(root, value):
    # dual-sign necessity: no lifecycle progress without the full pair
    for state in (
        CommitmentState.DRAFT,
        CommitmentState.PROPOSED,
        CommitmentState.BUYER_SIGNED,
    ):
        record = _at_state(root, value, state)
        with pytest.raises(InvalidLifecycleTransition):
            advance(record, LifecycleEvent.ESCROW_FUNDED)
    fully = _fully_signed(root, value)
    assert fully.buyer_signature and fully.seller_signature
    assert advance(fully, LifecycleEvent.ESCROW_FUNDED).state is \
        CommitmentState.ESCROWED


def test_advance_merges_metadata(root, value):
    record = _fully_signed(root, value)
    record = advance(record, LifecycleEvent.ESCROW_FUNDED, {"escrow_tx": "0x1"})
    record = advance(record, LifecycleEvent.DELIVERED, {"proof": "ipfs://x"})
    assert record.metadata == {"escrow_tx": "0x1", "proof": "ipfs://x"}


def test_export_roundtrip_fields(root, value):
    record = _fully_signed(root, value)
    exported = record.to_json_dict()
    assert exported["state"] == "fully_signed"
    assert exported["domain"]["chain_id"] == CHAIN_ID
    assert bytes.fromhex(exported["commitment_hash"]) == record.commitment_hash
    assert bytes.fromhex(exported["buyer_signature"]) == record.buyer_signature
