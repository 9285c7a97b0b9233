/** Console bootstrap: wires the API client, SSE subscription, store, and
 * renderers together. */

import { GatewayClient } from "./api.js";
import { subscribeEvents } from "./sse.js";
import {
  applyEvent,
  createState,
  syncAgents,
  syncReviews,
} from "./store.js";
import { renderAgentPanel, renderFeed, renderReviewQueue } from "./ui.js";

const baseUrl =
  new URLSearchParams(location.search).get("gateway") ?? location.origin;

const client = new GatewayClient(baseUrl);
const state = createState();

const queueEl = document.getElementById("review-queue")!;
const agentsEl = document.getElementById("agent-panel")!;
const feedEl = document.getElementById("event-feed")!;
const statusEl = document.getElementById("connection-status")!;

function notify(message: string): void {
  const node = document.getElementById("notice")!;
  node.textContent = message;
  setTimeout(() => {
    if (node.textContent === message) node.textContent = "";
  }, 5000);
}

function render(): void {
  renderReviewQueue(queueEl, state, client, notify);
  renderAgentPanel(agentsEl, state, client, () => void refreshAgents());
  renderFeed(feedEl, state);
}

async function refreshReviews(): Promise<void> {
  syncReviews(state, await client.listPendingReviews());
  render();
}

async function refreshAgents(): Promise<void> {
  syncAgents(state, await client.listAgents());
  render();
}

subscribeEvents(
  baseUrl,
  (event) => {
    if (applyEvent(state, event)) {
      render();
      void refreshAgents(); // budgets move when reviews resolve
    }
  },
  {
    onStatus: (status) => {
      statusEl.textContent = status;
      statusEl.className = `status-${status}`;
      if (status === "open") void refreshReviews();
    },
  },
);

void refreshReviews();
void refreshAgents();
setInterval(() => void refreshAgents(), 15_000);
