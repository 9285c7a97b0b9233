/** DOM rendering: review cards, agent panel, and the event feed.
 *
 * All render functions rebuild their container from current state, so a
 * replayed event or duplicated snapshot renders the identical DOM. */

import type { GatewayClient } from "./api.js";
import { ApiError } from "./api.js";
import type { ConsoleState } from "./store.js";
import { dayBudgetRatio, pendingCards } from "./store.js";
import type { ReviewDto } from "./types.js";

const MICRO = 1_000_000;

function formatAmount(micro: number): string {
  return `${(micro / MICRO).toFixed(2)} units`;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderCard(
  review: ReviewDto,
  client: GatewayClient,
  notify: (message: string) => void,
): HTMLElement {
  const card = el("article", `card urgency-${review.urgency}`);
  card.dataset.requestId = review.id;

  const head = el("header");
  head.append(
    el("span", "agent", review.agent_id.slice(0, 16)),
    el("span", "amount", formatAmount(review.action.amount)),
    el("span", `badge badge-${review.urgency}`, review.urgency),
  );
  card.append(head);

  card.append(
    el("p", "detail", `${review.action.method} on ${review.action.chain} → ${review.action.to.slice(0, 12)}…`),
  );
  const reasons = el("ul", "reasons");
  for (const reason of review.violation_reasons) {
    reasons.append(el("li", undefined, reason));
  }
  card.append(reasons);

  const controls = el("div", "controls");
  const approve = el("button", "approve", "Approve");
  const reject = el("button", "reject", "Reject");
  const modify = el("button", "modify", "Modify…");

  let biometricOk = false;
  if (review.required_tier === "biometric") {
    const label = el("label", "biometric");
    const toggle = el("input") as HTMLInputElement;
    toggle.type = "checkbox";
    toggle.addEventListener("change", () => {
      biometricOk = toggle.checked;
      approve.disabled = !biometricOk;
    });
    label.append(toggle, document.createTextNode(" biometric confirmed"));
    controls.append(label);
    approve.disabled = true; // approval is gated until the toggle is on
  }

  const respond = async (body: Parameters<GatewayClient["respond"]>[1]) => {
    try {
      await client.respond(review.id, body);
    } catch (error) {
      if (error instanceof ApiError) {
        notify(`${error.code}: ${error.message}`);
      } else {
        notify(String(error));
      }
    }
  };

  approve.addEventListener("click", () =>
    respond({
      verdict: "approve",
      responder: "console",
      biometric_confirmed: biometricOk,
    }),
  );
  reject.addEventListener("click", () =>
    respond({ verdict: "reject", responder: "console" }),
  );
  modify.addEventListener("click", () => {
    const raw = prompt(
      "New amount (units):",
      String(review.action.amount / MICRO),
    );
    if (raw === null) return;
    const amount = Math.round(Number(raw) * MICRO);
    if (!Number.isFinite(amount) || amount < 0) {
      notify("invalid amount");
      return;
    }
    void respond({
      verdict: "modify",
      responder: "console",
      modified_action: { ...review.action, amount },
    });
  });

  controls.append(approve, reject, modify);
  card.append(controls);
  return card;
}

export function renderReviewQueue(
  container: HTMLElement,
  state: ConsoleState,
  client: GatewayClient,
  notify: (message: string) => void,
): void {
  container.replaceChildren();
  const cards = pendingCards(state);
  if (cards.length === 0) {
    container.append(el("p", "empty", "No pending reviews."));
    return;
  }
  for (const review of cards) {
    container.append(renderCard(review, client, notify));
  }
}

export function renderAgentPanel(
  container: HTMLElement,
  state: ConsoleState,
  client: GatewayClient,
  refresh: () => void,
): void {
  container.replaceChildren();
  for (const agent of state.agents.values()) {
    const row = el("div", agent.frozen ? "agent-row frozen" : "agent-row");
    row.dataset.agentId = agent.agent_id;
    row.append(el("span", "agent", agent.agent_id.slice(0, 16)));

    const ratio = dayBudgetRatio(agent);
    const bar = el("div", "budget-bar");
    const fill = el("div", "budget-fill");
    fill.style.width = ratio === null ? "0%" : `${Math.round(ratio * 100)}%`;
    if (ratio !== null && ratio >= 0.9) fill.classList.add("hot");
    bar.append(fill);
    bar.title =
      ratio === null
        ? "no daily limit"
        : `${formatAmount(agent.totals.day)} spent today`;
    row.append(bar);

    const toggle = el(
      "button",
      agent.frozen ? "unfreeze" : "freeze",
      agent.frozen ? "Unfreeze" : "Freeze",
    );
    toggle.addEventListener("click", async () => {
      if (agent.frozen) await client.unfreeze(agent.agent_id);
      else await client.freeze(agent.agent_id);
      refresh();
    });
    row.append(toggle);
    container.append(row);
  }
}

export function renderFeed(container: HTMLElement, state: ConsoleState): void {
  container.replaceChildren();
  for (const entry of state.feed.slice(-50).reverse()) {
    container.append(
      el(
        "li",
        `feed-${entry.type}`,
        `${new Date(entry.timestamp).toISOString()} ${entry.type} ${entry.agentId.slice(0, 12)}`,
      ),
    );
  }
}
