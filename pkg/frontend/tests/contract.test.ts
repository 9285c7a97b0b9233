/** Contract tests against a real gateway process.
 *
 * A gateway is spawned from the Python package in the repository root and
 * the console's client modules are exercised over plain HTTP/SSE — the same
 * surface the browser uses. */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/api.js";
import { subscribeEvents, type SseHandle } from "../src/sse.js";
import { applyEvent, createState, pendingCards } from "../src/store.js";
import type { ActionDto, ReviewEvent } from "../src/types.js";

const MICRO = 1_000_000;
const REPO_ROOT = resolve(fileURLToPath(new URL(".", import.meta.url)), "..", "..");

function policyFor(agentId: string) {
  return {
    id: `pol-${agentId}`,
    agent_id: agentId,
    owner_xid: "console-owner",
    scope: "auto_payment",
    conditions: {
      max_amount_per_tx: 100 * MICRO,
      max_amount_per_day: 500 * MICRO,
      max_amount_per_week: null,
      max_amount_per_month: null,
      allow_list_addresses: [],
      allow_list_chains: [],
      allow_list_methods: [],
      time_window: null,
      min_balance_after: 0,
      require_review_first_pay: false,
    },
    created_at: 0,
    expires_at: 4_102_444_800_000,
  };
}

function freePort(): Promise<number> {
  return new Promise((resolvePort, reject) => {
    const server = createServer();
    server.once("error", reject);
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      server.close(() => resolvePort(address.port));
    });
  });
}

let actionSeq = 0;

function makeAction(agentId: string, amountMicro: number): ActionDto {
  actionSeq += 1;
  return {
    id: `console-act-${Date.now()}-${actionSeq}`,
    agent_id: agentId,
    amount: amountMicro,
    to: "0x" + "11".repeat(20),
    chain: "base",
    method: "transfer",
    timestamp: Date.now(),
    current_balance: 10_000 * MICRO,
  };
}

async function waitFor<T>(
  probe: () => T | undefined,
  timeoutMs: number,
  what: string,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = probe();
    if (value !== undefined) return value;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 25));
  }
}

let gateway: ChildProcess;
let client: GatewayClient;
let baseUrl: string;

beforeAll(async () => {
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  const config = {
    root_entropy_hex: "5a".repeat(32),
    passphrase: "console-owner",
    agents: [
      { agent_id: "console-a", privacy_level: "isolated", policies: [policyFor("console-a")], first_payment_done: true },
      { agent_id: "console-b", privacy_level: "isolated", policies: [policyFor("console-b")], first_payment_done: true },
    ],
  };
  const dir = mkdtempSync(join(tmpdir(), "aesp-console-"));
  const configPath = join(dir, "gateway.json");
  writeFileSync(configPath, JSON.stringify(config));
  gateway = spawn(
    "python3",
    ["-m", "aesp.gateway.cli", "serve", "--host", "127.0.0.1", "--port", String(port), "--config", configPath],
    {
      cwd: REPO_ROOT,
      env: { ...process.env, PYTHONPATH: join(REPO_ROOT, "src") },
      stdio: ["ignore", "pipe", "pipe"],
    },
  );
  gateway.stderr?.on("data", (chunk: Buffer) => {
    const text = chunk.toString();
    if (text.includes("Traceback")) console.error(text);
  });
  client = new GatewayClient(baseUrl);
  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      await client.listAgents();
      break;
    } catch {
      if (Date.now() > deadline) throw new Error("gateway did not start");
      await new Promise((r) => setTimeout(r, 100));
    }
  }
});

afterAll(() => {
  gateway?.kill();
});

describe("review console against a live gateway", () => {
  it("shows a review card via SSE within 2 seconds of an escalation", async () => {
    const state = createState();
    let handle: SseHandle | undefined;
    const opened = new Promise<void>((resolveOpen) => {
      handle = subscribeEvents(baseUrl, (event) => applyEvent(state, event), {
        onStatus: (status) => status === "open" && resolveOpen(),
      });
    });
    await opened;
    try {
      const action = makeAction("console-a", 150 * MICRO); // above the per-tx cap
      const submitted = Date.now();
      const actionHandle = await client.submitAction(action);
      const card = await waitFor(
        () => pendingCards(state).find((r) => r.action.id === action.id),
        2_000,
        "review card",
      );
      expect(Date.now() - submitted).toBeLessThan(2_000);
      expect(card.agent_id).toBe("console-a");
      expect(card.violation_reasons.length).toBeGreaterThan(0);

      await client.respond(card.id, { verdict: "reject", responder: "tester" });
      const outcome = await client.waitForOutcome(actionHandle);
      expect(outcome.status).toBe("rejected");
      // the rejection event must clear the card from the pending queue
      await waitFor(
        () => (pendingCards(state).some((r) => r.id === card.id) ? undefined : true),
        2_000,
        "card resolution",
      );
    } finally {
      handle?.close();
    }
  });

  it("unblocks a pending authorize when the reviewer approves", async () => {
    const action = makeAction("console-a", 150 * MICRO);
    const actionHandle = await client.submitAction(action);
    const deadline = Date.now() + 2_000;
    let card;
    for (;;) {
      const pending = await client.listPendingReviews();
      card = pending.find((r) => r.action.id === action.id);
      if (card) break;
      if (Date.now() > deadline) throw new Error("no review card");
      await new Promise((r) => setTimeout(r, 25));
    }

    await client.respond(card.id, { verdict: "approve", responder: "tester" });
    const outcome = await client.waitForOutcome(actionHandle);
    expect(outcome.status).toBe("executed");
    expect(outcome.signature).toBeTruthy();
    expect(outcome.review?.verdict).toBe("approve");
  });

  it("clears an agent's pending cards when the agent is frozen", async () => {
    const state = createState();
    const events: ReviewEvent[] = [];
    let handle: SseHandle | undefined;
    const opened = new Promise<void>((resolveOpen) => {
      handle = subscribeEvents(
        baseUrl,
        (event) => {
          events.push(event);
          applyEvent(state, event);
        },
        { onStatus: (status) => status === "open" && resolveOpen() },
      );
    });
    await opened;
    try {
      const action = makeAction("console-b", 150 * MICRO);
      const actionHandle = await client.submitAction(action);
      await waitFor(
        () => pendingCards(state).find((r) => r.action.id === action.id),
        2_000,
        "review card before freeze",
      );

      await client.freeze("console-b");
      const outcome = await client.waitForOutcome(actionHandle);
      expect(outcome.status).toBe("frozen");

      const serverPending = await client.listPendingReviews();
      expect(serverPending.filter((r) => r.agent_id === "console-b")).toEqual([]);
      await waitFor(
        () =>
          pendingCards(state).some((r) => r.agent_id === "console-b")
            ? undefined
            : true,
        2_000,
        "cancelled card removal",
      );
      expect(events.some((e) => e.type === "request_cancelled")).toBe(true);

      const agents = await client.listAgents();
      expect(agents.find((a) => a.agent_id === "console-b")?.frozen).toBe(true);
    } finally {
      handle?.close();
      await client.unfreeze("console-b");
    }
  });

  it("rejects a forged biometric approval with 422, then accepts a real one", async () => {
    const oldPolicy = policyFor("console-a");
    const newPolicy = {
      ...oldPolicy,
      conditions: { ...oldPolicy.conditions, max_amount_per_day: 900 * MICRO },
    };
    const submitted = await client.submitPolicyChange(oldPolicy, newPolicy);
    expect(submitted.status).toBe("pending");
    expect(submitted.required_approval).toBe("biometric");
    const reviewId = submitted.review_request_id!;

    // approval without the biometric confirmation must be refused
    const forged = client.respond(reviewId, { verdict: "approve", responder: "tester" });
    await expect(forged).rejects.toMatchObject({ status: 422, code: "TIER_VIOLATION" });
    await expect(forged).rejects.toBeInstanceOf(ApiError);

    await client.respond(reviewId, {
      verdict: "approve",
      responder: "tester",
      biometric_confirmed: true,
    });
    const deadline = Date.now() + 5_000;
    for (;;) {
      const status = await client.policyChangeStatus(reviewId);
      if (status.status !== "pending") {
        expect(status.status).toBe("accepted");
        break;
      }
      if (Date.now() > deadline) throw new Error("policy change never settled");
      await new Promise((r) => setTimeout(r, 50));
    }
  });
});
