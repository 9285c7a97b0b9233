"""HTTP JSON API + server-sent events for the review console.

Endpoints
---------
GET  /api/reviews?status=pending
POST /api/reviews/{id}/respond   {verdict, modified_action?, biometric_confirmed?}
GET  /api/agents
POST /api/agents/{id}/freeze | /unfreeze
GET  /api/budget/{agent_id}
GET  /api/events                 (SSE, event name = review event type, no replay)
POST /api/actions                submit an authorize asynchronously
GET  /api/actions/{id}           poll its outcome
POST /api/policy-changes         gated policy change (escalates per tier)

Errors are {code, message} with 404 (unknown id), 409 (already
resolved / past deadline), 422 (tier violation).
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from typing import Dict, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from ..policy import ActionRequest, ApprovalLevel, Policy
from ..privacy import PrivacyLevel
from ..review import (
    AlreadyResolved,
    PastDeadline,
    ReviewResponse,
    Tier,
    TierViolation,
    UnknownRequest,
    Urgency,
    Verdict as ReviewVerdict,
)
from .pipeline import Gateway, UnknownAgent

SSE_QUEUE_SIZE = 256  # slow subscribers are disconnected, not blocking


def _now_ms() -> int:
    return int(time.time() * 1000)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def create_app(gateway: Gateway) -> FastAPI:
    app = FastAPI(title="aesp gateway")
    app.state.gateway = gateway
    app.state.outcomes: Dict[str, dict] = {}
    app.state.pending_changes: Dict[str, dict] = {}

    # --- reviews ---

    @app.get("/api/reviews")
    def list_reviews(status: str = "pending"):
        if status != "pending":
            return _error(422, "UNSUPPORTED_FILTER", f"status={status}")
        return [r.to_json_dict() for r in gateway.reviews.pending()]

    @app.post("/api/reviews/{request_id}/respond")
    def respond(request_id: str, body: dict):
        try:
            verdict = ReviewVerdict(body["verdict"])
        except (KeyError, ValueError):
            return _error(422, "BAD_VERDICT", "verdict must be approve|reject|modify")
        modified = None
        if body.get("modified_action") is not None:
            try:
                modified = ActionRequest.from_json_dict(body["modified_action"])
            except (KeyError, TypeError, ValueError) as exc:
                return _error(422, "BAD_ACTION", str(exc))
        response = ReviewResponse(
            request_id=request_id,
            verdict=verdict,
            responder=body.get("responder", "console"),
            timestamp=_now_ms(),
            modified_action=modified,
            biometric_confirmed=bool(body.get("biometric_confirmed", False)),
        )
        try:
            gateway.reviews.respond(request_id, response, _now_ms())
        except UnknownRequest:
            return _error(404, "UNKNOWN_REQUEST", request_id)
        except AlreadyResolved as exc:
            return _error(409, "ALREADY_RESOLVED", str(exc))
        except PastDeadline as exc:
            return _error(409, "PAST_DEADLINE", str(exc))
        except TierViolation as exc:
            return _error(422, "TIER_VIOLATION", str(exc))
        except ValueError as exc:
            return _error(422, "BAD_RESPONSE", str(exc))
        return {"ok": True, "request_id": request_id, "verdict": verdict.value}

    # --- agents / budgets ---

    @app.get("/api/agents")
    def agents():
        return gateway.agent_summaries(_now_ms())

    @app.post("/api/agents/{agent_id}/freeze")
    def freeze(agent_id: str):
        if agent_id not in gateway.agents:
            return _error(404, "UNKNOWN_AGENT", agent_id)
        gateway.reviews.freeze(agent_id, _now_ms())
        return {"ok": True, "agent_id": agent_id, "frozen": True}

    @app.post("/api/agents/{agent_id}/unfreeze")
    def unfreeze(agent_id: str):
        if agent_id not in gateway.agents:
            return _error(404, "UNKNOWN_AGENT", agent_id)
        gateway.reviews.unfreeze(agent_id)
        return {"ok": True, "agent_id": agent_id, "frozen": False}

    @app.get("/api/budget/{agent_id}")
    def budget(agent_id: str):
        try:
            return gateway.budget_summary(agent_id, _now_ms())
        except UnknownAgent:
            return _error(404, "UNKNOWN_AGENT", agent_id)

    # --- async authorize ---

    @app.post("/api/actions")
    def submit_action(body: dict):
        try:
            action = ActionRequest.from_json_dict(body["action"])
        except (KeyError, TypeError, ValueError) as exc:
            return _error(422, "BAD_ACTION", str(exc))
        if action.agent_id not in gateway.agents:
            return _error(404, "UNKNOWN_AGENT", action.agent_id)
        level = None
        if body.get("privacy_level"):
            level = PrivacyLevel(body["privacy_level"])
        handle = str(uuid.uuid4())
        app.state.outcomes[handle] = {"status": "pending"}

        def run():
            outcome = gateway.authorize(action, level, _now_ms())
            app.state.outcomes[handle] = outcome.to_json_dict()

        threading.Thread(target=run, daemon=True).start()
        return JSONResponse({"id": handle, "status": "pending"}, status_code=202)

    @app.get("/api/actions/{handle}")
    def action_status(handle: str):
        outcome = app.state.outcomes.get(handle)
        if outcome is None:
            return _error(404, "UNKNOWN_ACTION", handle)
        return outcome

    # --- gated policy changes ---

    @app.post("/api/policy-changes")
    def policy_change(body: dict):
        try:
            old = Policy.from_json_dict(body["old"])
            new = Policy.from_json_dict(body["new"])
        except (KeyError, TypeError, ValueError) as exc:
            return _error(422, "BAD_POLICY", str(exc))
        if new.agent_id not in gateway.agents:
            return _error(404, "UNKNOWN_AGENT", new.agent_id)
        from ..policy import classify_change

        report = classify_change(old, new)
        if report.required_approval is ApprovalLevel.NONE:
            result = gateway.apply_policy_change(old, new)
            return {"status": "accepted", "required_approval": "none",
                    "changes": [c.type.value for c in report.changes]}
        tier = (
            Tier.BIOMETRIC
            if report.required_approval is ApprovalLevel.BIOMETRIC
            else Tier.REVIEW
        )
        now = _now_ms()
        placeholder = ActionRequest(
            id=f"policy-change-{uuid.uuid4()}",
            agent_id=new.agent_id,
            amount=0,
            to="policy-change",
            chain="-",
            method="-",
            timestamp=now,
            current_balance=0,
        )
        reasons = [c.detail for c in report.changes]
        urgency = Urgency.CRITICAL if tier is Tier.BIOMETRIC else Urgency.HIGH
        request, future = gateway.reviews.submit(
            placeholder, reasons, urgency, tier, now
        )
        handle = request.id
        app.state.pending_changes[handle] = {"status": "pending"}

        def waiter():
            try:
                response = future.result()
            except Exception as exc:  # rejected / expired / frozen
                app.state.pending_changes[handle] = {
                    "status": "rejected", "reason": type(exc).__name__,
                }
                return
            result = gateway.apply_policy_change(old, new, response)
            app.state.pending_changes[handle] = {
                "status": "accepted" if result.accepted else "rejected",
                "reason": result.reason,
            }

        threading.Thread(target=waiter, daemon=True).start()
        return JSONResponse(
            {
                "status": "pending",
                "review_request_id": handle,
                "required_approval": report.required_approval.value,
                "changes": [c.type.value for c in report.changes],
            },
            status_code=202,
        )

    @app.get("/api/policy-changes/{handle}")
    def policy_change_status(handle: str):
        state = app.state.pending_changes.get(handle)
        if state is None:
            return _error(404, "UNKNOWN_CHANGE", handle)
        return state

    # --- server-sent events ---

    @app.get("/api/events")
    def events(request: Request):
        subscriber: "queue.Queue[Optional[str]]" = queue.Queue(SSE_QUEUE_SIZE)

        def on_event(event):
            frame = (
                f"event: {event.type.value}\n"
                f"data: {json.dumps({'type': event.type.value, 'request_id': event.request_id, 'timestamp': event.timestamp, 'payload': event.payload})}\n\n"
            )
            try:
                subscriber.put_nowait(frame)
            except queue.Full:
                unsubscribe()  # drop the slow subscriber, never block the bus

        unsubscribe = gateway.reviews.subscribe(on_event)

        def stream():
            try:
                yield ": connected\n\n"
                while True:
                    try:
                        frame = subscriber.get(timeout=15)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    if frame is None:
                        break
                    yield frame
            finally:
                unsubscribe()

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    return app


def serve(gateway: Gateway, host: str = "127.0.0.1", port: int = 8700) -> None:
    import uvicorn

    uvicorn.run(create_app(gateway), host=host, port=port, log_level="warning")
