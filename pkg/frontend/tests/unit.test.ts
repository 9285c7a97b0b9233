import { describe, expect, it } from "vitest";

import { parseFrames } from "../src/sse.js";
import {
  applyEvent,
  createState,
  dayBudgetRatio,
  pendingCards,
  syncReviews,
  upsertReview,
} from "../src/store.js";
import type { AgentSummary, ReviewDto, ReviewEvent } from "../src/types.js";

function review(overrides: Partial<ReviewDto> = {}): ReviewDto {
  return {
    id: "rev-1",
    action: {
      id: "act-1",
      agent_id: "agent-a",
      amount: 150_000_000,
      to: "0x" + "11".repeat(20),
      chain: "base",
      method: "transfer",
      timestamp: 1_700_000_000_000,
      current_balance: 1_000_000_000,
    },
    agent_id: "agent-a",
    violation_reasons: ["per-tx cap exceeded"],
    urgency: "high",
    created_at: 1_700_000_000_000,
    deadline: 1_700_001_800_000,
    required_tier: "review",
    status: "pending",
    ...overrides,
  };
}

describe("parseFrames", () => {
  it("splits complete frames and keeps the remainder", () => {
    const { frames, rest } = parseFrames(
      'event: request_created\ndata: {"a":1}\n\nevent: request_appr',
    );
    expect(frames).toEqual([{ event: "request_created", data: '{"a":1}' }]);
    expect(rest).toBe("event: request_appr");
  });

  it("ignores comments and keepalives", () => {
    const { frames, rest } = parseFrames(": connected\n\n: keepalive\n\n");
    expect(frames).toEqual([]);
    expect(rest).toBe("");
  });

  it("joins multi-line data fields", () => {
    const { frames } = parseFrames("data: one\ndata: two\n\n");
    expect(frames[0].data).toBe("one\ntwo");
  });
});

describe("store reducer", () => {
  it("applies an event once and is a no-op on replay", () => {
    const state = createState();
    const event: ReviewEvent = {
      type: "request_created",
      request_id: "rev-1",
      timestamp: 1_700_000_000_000,
      payload: review(),
    };
    expect(applyEvent(state, event)).toBe(true);
    expect(applyEvent(state, event)).toBe(false);
    expect(pendingCards(state)).toHaveLength(1);
    expect(state.feed).toHaveLength(1);
  });

  it("never regresses a resolved review back to pending", () => {
    const state = createState();
    upsertReview(state, review({ status: "approved" }));
    expect(upsertReview(state, review({ status: "pending" }))).toBe(false);
    expect(state.reviews.get("rev-1")?.status).toBe("approved");
    expect(pendingCards(state)).toHaveLength(0);
  });

  it("orders pending cards by urgency desc then FIFO", () => {
    const state = createState();
    upsertReview(state, review({ id: "a", urgency: "normal", created_at: 1 }));
    upsertReview(state, review({ id: "b", urgency: "critical", created_at: 3 }));
    upsertReview(state, review({ id: "c", urgency: "normal", created_at: 2 }));
    expect(pendingCards(state).map((r) => r.id)).toEqual(["b", "a", "c"]);
  });

  it("drops locally-pending reviews missing from a server snapshot", () => {
    const state = createState();
    upsertReview(state, review({ id: "gone" }));
    syncReviews(state, [review({ id: "kept" })]);
    expect(state.reviews.get("gone")?.status).toBe("cancelled");
    expect(pendingCards(state).map((r) => r.id)).toEqual(["kept"]);
  });
});

describe("dayBudgetRatio", () => {
  it("uses the tightest day limit and clamps at 1", () => {
    const agent: AgentSummary = {
      agent_id: "agent-a",
      totals: { day: 400, week: 400, month: 400 },
      limits: {
        p1: { day: 500, week: null, month: null },
        p2: { day: 800, week: null, month: null },
      },
      frozen: false,
    };
    expect(dayBudgetRatio(agent)).toBeCloseTo(0.8);
    agent.totals.day = 900;
    expect(dayBudgetRatio(agent)).toBe(1);
    expect(
      dayBudgetRatio({ ...agent, limits: { p1: { day: null, week: null, month: null } } }),
    ).toBeNull();
  });
});
