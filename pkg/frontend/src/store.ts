/** Console state and its event reducer.
 *
 * Rendering must be idempotent: applying the same event twice, or replaying
 * a stale snapshot after newer events, never regresses state. Reviews are
 * keyed by id and a resolved review never returns to pending. */

import type { AgentSummary, ReviewDto, ReviewEvent } from "./types.js";

const STATUS_RANK: Record<string, number> = {
  pending: 0,
  approved: 1,
  rejected: 1,
  modified: 1,
  expired: 1,
  cancelled: 1,
};

export interface FeedEntry {
  type: string;
  requestId: string;
  timestamp: number;
  agentId: string;
}

export interface ConsoleState {
  reviews: Map<string, ReviewDto>;
  agents: Map<string, AgentSummary>;
  feed: FeedEntry[];
}

export function createState(): ConsoleState {
  return { reviews: new Map(), agents: new Map(), feed: [] };
}

/** Upsert one review snapshot; stale snapshots for resolved reviews lose. */
export function upsertReview(state: ConsoleState, review: ReviewDto): boolean {
  const existing = state.reviews.get(review.id);
  if (existing && STATUS_RANK[review.status] < STATUS_RANK[existing.status]) {
    return false;
  }
  if (
    existing &&
    existing.status === review.status &&
    JSON.stringify(existing) === JSON.stringify(review)
  ) {
    return false;
  }
  state.reviews.set(review.id, review);
  return true;
}

/** Apply one SSE event. Returns true when state changed (idempotent). */
export function applyEvent(state: ConsoleState, event: ReviewEvent): boolean {
  const changed = upsertReview(state, event.payload);
  const key = `${event.type}:${event.request_id}:${event.timestamp}`;
  const seen = state.feed.some(
    (entry) =>
      `${entry.type}:${entry.requestId}:${entry.timestamp}` === key,
  );
  if (!seen) {
    state.feed.push({
      type: event.type,
      requestId: event.request_id,
      timestamp: event.timestamp,
      agentId: event.payload.agent_id,
    });
  }
  return changed || !seen;
}

/** Replace the review list from a GET /api/reviews snapshot. */
export function syncReviews(state: ConsoleState, reviews: ReviewDto[]): void {
  for (const review of reviews) upsertReview(state, review);
  // anything pending locally but absent from the server snapshot was
  // resolved while we were away; drop it from the pending set
  const serverIds = new Set(reviews.map((r) => r.id));
  for (const [id, review] of state.reviews) {
    if (review.status === "pending" && !serverIds.has(id)) {
      state.reviews.set(id, { ...review, status: "cancelled" });
    }
  }
}

export function syncAgents(state: ConsoleState, agents: AgentSummary[]): void {
  state.agents = new Map(agents.map((a) => [a.agent_id, a]));
}

/** Pending cards in dequeue order: urgency desc, then FIFO. */
export function pendingCards(state: ConsoleState): ReviewDto[] {
  const urgencyRank = { critical: 3, high: 2, normal: 1, low: 0 };
  return [...state.reviews.values()]
    .filter((r) => r.status === "pending")
    .sort(
      (a, b) =>
        urgencyRank[b.urgency] - urgencyRank[a.urgency] ||
        a.created_at - b.created_at,
    );
}

/** Day-budget utilisation in [0, 1] for an agent's tightest day limit. */
export function dayBudgetRatio(agent: AgentSummary): number | null {
  const limits = Object.values(agent.limits)
    .map((l) => l.day)
    .filter((day): day is number => day !== null && day > 0);
  if (limits.length === 0) return null;
  return Math.min(1, agent.totals.day / Math.min(...limits));
}
