"""Three end-to-end scenarios run against the in-memory stack, printing
an event trace: a three-party grocery delivery, a cloud-spend guardrail
exercise (budget limits, biometric policy gating, freeze/unfreeze), and
an NFT purchase negotiated and committed between two agents."""

from __future__ import annotations

import dataclasses
import threading
import time
from typing import Callable, List

from ..constants import MICRO
from ..crypto import MasterCredential, derive_identity_root, sha256
from ..policy import (
    ActionRequest,
    ApprovalLevel,
    Policy,
    PolicyConditions,
    Scope,
    TimeWindow,
)
from ..review import ReviewResponse, Verdict as ReviewVerdict
from .pipeline import AuthorizeStatus, Gateway

UNIT = MICRO
NOW = 1_735_729_200_000  # 2025-01-01T11:00:00Z, inside demo windows


def _gateway() -> Gateway:
    root = derive_identity_root(MasterCredential(b"\x5a" * 32, "demo-owner"))
    return Gateway(root)


def _policy(agent_id: str, **overrides) -> Policy:
    conditions = PolicyConditions(
        max_amount_per_tx=overrides.pop("max_per_tx", 100 * UNIT),
        max_amount_per_day=overrides.pop("per_day", 500 * UNIT),
        max_amount_per_week=overrides.pop("per_week", 2000 * UNIT),
        max_amount_per_month=overrides.pop("per_month", 5000 * UNIT),
        allow_list_addresses=overrides.pop("addresses", ()),
        allow_list_chains=("ethereum", "polygon"),
        allow_list_methods=("card", "crypto_transfer"),
        time_window=TimeWindow("08:00", "22:00"),
        min_balance_after=overrides.pop("min_balance", 0),
        require_review_first_pay=overrides.pop("first_pay", False),
    )
    return Policy(
        id=f"pol-{agent_id}",
        agent_id=agent_id,
        owner_xid="owner-demo",
        scope=overrides.pop("scope", Scope.AUTO_PAYMENT),
        conditions=conditions,
        created_at=0,
        expires_at=NOW + 365 * 86_400_000,
    )


def _act(agent_id: str, idx: int, amount_units: float, to: str,
         method: str = "card") -> ActionRequest:
    return ActionRequest(
        id=f"{agent_id}-{idx}",
        agent_id=agent_id,
        amount=int(amount_units * UNIT),
        to=to,
        chain="ethereum",
        method=method,
        timestamp=NOW + idx * 60_000,
        current_balance=10_000 * UNIT,
    )


def _auto_human(gateway: Gateway, verdict: ReviewVerdict,
                biometric: bool = False) -> threading.Thread:
    """Respond to the next pending review from a background thread."""

    def run():
        for _ in range(100):
            pending = gateway.reviews.pending()
            if pending:
                request = pending[0]
                gateway.reviews.respond(
                    request.id,
                    ReviewResponse(
                        request_id=request.id,
                        verdict=verdict,
                        responder="demo-human",
                        timestamp=NOW,
                        biometric_confirmed=biometric,
                    ),
                    NOW,
                )
                return
            time.sleep(0.02)

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    return thread


def demo_grocery() -> List[str]:
    """Household agent pays grocer and courier; a tip above the per-tx
    cap escalates and the human approves it."""
    trace: List[str] = []
    gateway = _gateway()
    gateway.reviews.subscribe(
        lambda e: trace.append(f"event {e.type.value} ({e.request_id[:8]})")
    )
    grocer, courier = "0x" + "a1" * 20, "0x" + "b2" * 20
    gateway.register_agent(
        "grocery-agent", [_policy("grocery-agent", addresses=(grocer, courier))]
    )

    order_act = _act("grocery-agent", 1, 62.5, grocer)
    order = gateway.authorize(order_act, now=order_act.timestamp)
    trace.append(f"grocery order 62.50 -> {order.status.value} "
                 f"(addr {order.ephemeral_address[:10]}…)")
    delivery_act = _act("grocery-agent", 2, 12.0, courier)
    delivery = gateway.authorize(delivery_act, now=delivery_act.timestamp)
    trace.append(f"courier fee 12.00 -> {delivery.status.value}")

    human = _auto_human(gateway, ReviewVerdict.APPROVE)
    tip_act = _act("grocery-agent", 3, 150.0, courier)
    tip = gateway.authorize(tip_act, now=tip_act.timestamp, review_timeout_s=10)
    human.join()
    trace.append(f"oversize tip 150.00 -> escalated, human approved -> "
                 f"{tip.status.value}")
    summary = gateway.budget_summary("grocery-agent", NOW + 600_000)
    trace.append(f"day spend: {summary['totals']['day'] / UNIT:.2f} units")
    return trace


def demo_cloud() -> List[str]:
    """Cloud-spend agent hits its daily budget, a cap raise needs
    biometric approval, and the owner runs a freeze/unfreeze cycle."""
    trace: List[str] = []
    gateway = _gateway()
    gateway.reviews.subscribe(
        lambda e: trace.append(f"event {e.type.value} ({e.request_id[:8]})")
    )
    provider = "0x" + "c3" * 20
    policy = _policy("cloud-agent", addresses=(provider,), per_day=500 * UNIT)
    gateway.register_agent("cloud-agent", [policy])

    for i in range(5):
        burst = _act("cloud-agent", i, 99.0, provider)
        outcome = gateway.authorize(burst, now=burst.timestamp)
        trace.append(f"compute burst {i + 1} (99.00) -> {outcome.status.value}")
    human = _auto_human(gateway, ReviewVerdict.REJECT)
    over_act = _act("cloud-agent", 6, 99.0, provider)
    over = gateway.authorize(over_act, now=over_act.timestamp, review_timeout_s=10)
    human.join()
    trace.append(f"burst 6 crosses 500/day -> {over.status.value}")

    raised = dataclasses.replace(
        policy,
        conditions=dataclasses.replace(policy.conditions,
                                       max_amount_per_day=1000 * UNIT),
    )
    plain = gateway.apply_policy_change(
        policy, raised,
        ReviewResponse("chg", ReviewVerdict.APPROVE, "demo-human", NOW),
    )
    trace.append(f"day-cap raise w/o biometric -> "
                 f"{'accepted' if plain.accepted else 'rejected'} "
                 f"(requires {plain.required_approval.value})")
    biometric = gateway.apply_policy_change(
        policy, raised,
        ReviewResponse("chg", ReviewVerdict.APPROVE, "demo-human", NOW,
                       biometric_confirmed=True),
    )
    trace.append(f"day-cap raise with biometric -> "
                 f"{'accepted' if biometric.accepted else 'rejected'}")

    gateway.reviews.freeze("cloud-agent", NOW)
    frozen_act = _act("cloud-agent", 7, 10.0, provider)
    frozen = gateway.authorize(frozen_act, now=frozen_act.timestamp)
    trace.append(f"while frozen -> {frozen.status.value}")
    gateway.reviews.unfreeze("cloud-agent")
    thawed = gateway.authorize(_act("cloud-agent", 8, 10.0, provider),
                               now=NOW + 86_400_000)
    trace.append(f"after unfreeze (next day) -> {thawed.status.value}")
    return trace


def demo_nft() -> List[str]:
    """Two agents negotiate an NFT price over the encrypted channel, the
    agreement hash binds into a dual-signed commitment, and the record
    walks its lifecycle to completion."""
    from ..commitment import (
        CommitmentValue,
        LifecycleEvent,
        Role,
        advance,
        build,
        propose,
        sign_as,
        verify_signatures,
    )
    from ..crypto import Curve, contextual_evm_address, derive_contextual_keypair
    from ..negotiation import (
        InMemoryTransport,
        Kind,
        MessageType,
        NegotiationProtocol,
        State,
    )

    trace: List[str] = []
    buyer_root = derive_identity_root(MasterCredential(b"\x31" * 32, "nft-buyer"))
    seller_root = derive_identity_root(MasterCredential(b"\x32" * 32, "nft-seller"))
    transport = InMemoryTransport()
    buyer_kp = derive_contextual_keypair(buyer_root, Curve.X25519, "nft:neg:")
    seller_kp = derive_contextual_keypair(seller_root, Curve.X25519, "nft:neg:")
    buyer = NegotiationProtocol(
        "buyer-agent", buyer_kp, transport,
        {"seller-agent": seller_kp.public_key},
    )
    seller = NegotiationProtocol(
        "seller-agent", seller_kp, transport,
        {"buyer-agent": buyer_kp.public_key},
    )

    transport.register("buyer-agent", buyer.receive_message)
    transport.register("seller-agent", seller.receive_message)
    session_id = "nft-session-1"
    sb = buyer.open_session(session_id, "buyer-agent", "seller-agent", NOW)
    ss = seller.open_session(session_id, "buyer-agent", "seller-agent", NOW)
    buyer.send_message(sb, MessageType.OFFER,
                       {"item": "nft-742", "price_units": 80}, NOW)
    trace.append("buyer offers 80")
    seller.send_message(ss, MessageType.COUNTER,
                        {"item": "nft-742", "price_units": 92}, NOW + 1000)
    trace.append("seller counters 92")
    buyer.send_message(sb, MessageType.ACCEPT, None, NOW + 2000)
    trace.append(f"buyer accepts; session {ss.state.value}/{sb.state.value}")
    agreement_hash = sb.agreement_hash
    trace.append(f"agreement hash {agreement_hash.hex()[:16]}…")

    buyer_addr = contextual_evm_address(buyer_root, "nft:commit:buyer:")
    seller_addr = contextual_evm_address(seller_root, "nft:commit:seller:")
    value = CommitmentValue(
        buyer_agent=buyer_addr,
        seller_agent=seller_addr,
        item="nft-742",
        price=str(92 * UNIT),
        currency="0x" + "d4" * 20,
        delivery_deadline=(NOW // 1000) + 86_400,
        arbitrator="0x" + "e5" * 20,
        escrow_required=True,
        nonce="7",
    )
    record = propose(build(1, value, agreement_hash))
    record = sign_as(record, Role.BUYER, buyer_root, "nft:commit:buyer:")
    trace.append(f"buyer signed -> {record.state.value}")
    record = sign_as(record, Role.SELLER, seller_root, "nft:commit:seller:")
    trace.append(f"seller signed -> {record.state.value} "
                 f"(signatures valid: {verify_signatures(record)})")
    for event in (LifecycleEvent.ESCROW_FUNDED, LifecycleEvent.DELIVERED,
                  LifecycleEvent.RELEASED):
        record = advance(record, event)
        trace.append(f"lifecycle -> {record.state.value}")
    return trace


DEMOS: dict = {
    "grocery": demo_grocery,
    "cloud": demo_cloud,
    "nft": demo_nft,
}
