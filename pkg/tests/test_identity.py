"""Identity derivation, certificates, and the delegation hierarchy."""

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aesp.constants import MAX_HIERARCHY_DEPTH
from aesp.crypto import Curve, derive_contextual_keypair, sha256
from aesp.identity import (
    ALL_CAPABILITIES,
    ROOT_SENTINEL,
    Capability,
    CapabilityEscalation,
    CertVerdict,
    DepthExceeded,
    HierarchyError,
    HierarchyManager,
    UnknownParent,
    derive_agent,
    issue_certificate,
    verify_certificate,
)

NOW = 1_735_689_600_000
DAY = 86_400_000


@pytest.fixture(scope="module")
def owner_kp(root):
    return derive_contextual_keypair(root, Curve.ED25519, "owner:cert:")


def test_derive_agent_is_deterministic_and_distinct(root):
    a0 = derive_agent(root, 0)
    a0_again = derive_agent(root, 0)
    a1 = derive_agent(root, 1)
    assert a0.public_key == a0_again.public_key
    assert a0.agent_id == a0_again.agent_id
    assert a0.agent_id != a1.agent_id
    # agent_id is the SHA-256 of the public key, did embeds it
    assert a0.agent_id == sha256(a0.public_key).hex()
    assert a0.did == f"did:aesp:{a0.agent_id}"
    assert len(a0.agent_id) == 64
    assert a0.agent_id == a0.agent_id.lower()


def test_derive_agent_golden_vector(root):
    # Frozen from the HKDF oracle: context "agent-identity:0:".
    assert (
        derive_agent(root, 0).public_key.hex()
        == "f0a42302d55071488b83621d662586a82b6c2e91f560a1dc4dabc6fc42a98bf1"
    )


def test_derive_agent_rejects_negative_index(root):
    with pytest.raises(ValueError):
        derive_agent(root, -1)


def _issue(owner_kp, agent, **overrides):
    params = dict(
        owner_kp=owner_kp,
        agent=agent,
        capabilities={Capability.PAYMENT, Capability.NEGOTIATION},
        policy_json={"per_tx": 100},
        max_amount=100_000_000,
        chains=["ethereum"],
        validity_ms=30 * DAY,
        now=NOW,
    )
    params.update(overrides)
    return issue_certificate(**params)


def test_certificate_roundtrip_and_verify(root, owner_kp):
    agent = derive_agent(root, 0)
    cert = _issue(owner_kp, agent)
    assert verify_certificate(cert, owner_kp.public_key, NOW + 1) == CertVerdict.VALID
    restored = type(cert).from_json_dict(cert.to_json_dict())
    assert restored == cert
    assert (
        verify_certificate(restored, owner_kp.public_key, NOW + 1) == CertVerdict.VALID
    )


def test_certificate_expiry_boundary_is_exclusive(root, owner_kp):
    agent = derive_agent(root, 0)
    cert = _issue(owner_kp, agent)
    assert (
        verify_certificate(cert, owner_kp.public_key, cert.expires_at - 1)
        == CertVerdict.VALID
    )
    assert (
        verify_certificate(cert, owner_kp.public_key, cert.expires_at)
        == CertVerdict.EXPIRED
    )


def test_certificate_tamper_invalidates_signature(root, owner_kp):
    agent = derive_agent(root, 0)
    cert = _issue(owner_kp, agent)
    forged = dataclasses.replace(cert, max_autonomous_amount=10**12)
    assert (
        verify_certificate(forged, owner_kp.public_key, NOW + 1)
        == CertVerdict.SIGNATURE_INVALID
    )


def test_certificate_untrusted_owner(root, owner_kp):
    agent = derive_agent(root, 0)
    cert = _issue(owner_kp, agent)
    other = derive_contextual_keypair(root, Curve.ED25519, "owner:other:")
    assert (
        verify_certificate(cert, other.public_key, NOW + 1)
        == CertVerdict.UNTRUSTED_OWNER
    )
    # untrusted owner is checked before expiry
    assert (
        verify_certificate(cert, other.public_key, cert.expires_at + DAY)
        == CertVerdict.UNTRUSTED_OWNER
    )


def test_certificate_rejects_nonpositive_validity(root, owner_kp):
    agent = derive_agent(root, 0)
    with pytest.raises(ValueError):
        _issue(owner_kp, agent, validity_ms=0)


def test_hierarchy_depth_cap(root):
    mgr = HierarchyManager()
    parent = ROOT_SENTINEL
    for depth in range(1, MAX_HIERARCHY_DEPTH + 1):
        agent = derive_agent(root, depth)
        node = mgr.add_child(parent, agent, {Capability.PAYMENT})
        assert node.depth == depth
        parent = agent.agent_id
    overflow = derive_agent(root, MAX_HIERARCHY_DEPTH + 1)
    with pytest.raises(DepthExceeded):
        mgr.add_child(parent, overflow, {Capability.PAYMENT})


def test_hierarchy_capability_monotonicity(root):
    mgr = HierarchyManager()
    a = derive_agent(root, 10)
    b = derive_agent(root, 11)
    mgr.add_child(ROOT_SENTINEL, a, {Capability.PAYMENT, Capability.DELEGATION})
    with pytest.raises(CapabilityEscalation):
        mgr.add_child(a.agent_id, b, {Capability.PAYMENT, Capability.ARBITRATION})
    # subset (including equality) is fine
    node = mgr.add_child(a.agent_id, b, {Capability.PAYMENT})
    assert node.capabilities == frozenset({Capability.PAYMENT})


def test_hierarchy_unknown_parent_and_duplicates(root):
    mgr = HierarchyManager()
    a = derive_agent(root, 20)
    with pytest.raises(UnknownParent):
        mgr.add_child("f" * 64, a, {Capability.PAYMENT})
    mgr.add_child(ROOT_SENTINEL, a, {Capability.PAYMENT})
    with pytest.raises(HierarchyError):
        mgr.add_child(ROOT_SENTINEL, a, {Capability.PAYMENT})


def test_escalation_chain_walks_to_root(root):
    mgr = HierarchyManager()
    a = derive_agent(root, 30)
    b = derive_agent(root, 31)
    c = derive_agent(root, 32)
    mgr.add_child(ROOT_SENTINEL, a, ALL_CAPABILITIES)
    mgr.add_child(a.agent_id, b, {Capability.PAYMENT, Capability.DELEGATION})
    mgr.add_child(b.agent_id, c, {Capability.PAYMENT})
    assert mgr.escalation_chain(c.agent_id) == [
        c.agent_id,
        b.agent_id,
        a.agent_id,
        ROOT_SENTINEL,
    ]
    with pytest.raises(HierarchyError):
        mgr.escalation_chain("a" * 64)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=500))
def test_agent_index_injective_property(root, index):
    # distinct indices never collide with index 0's identity
    a = derive_agent(root, index)
    b = derive_agent(root, index + 1)
    assert a.agent_id != b.agent_id
