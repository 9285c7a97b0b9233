/** Thin typed client over the gateway's HTTP API. */

import type {
  ActionDto,
  ActionOutcome,
  AgentSummary,
  PolicyChangeSubmitted,
  RespondBody,
  ReviewDto,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    ...init,
    headers: { "content-type": "application/json", ...init?.headers },
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(
      response.status,
      (body as { code?: string }).code ?? "UNKNOWN",
      (body as { message?: string }).message ?? response.statusText,
    );
  }
  return body as T;
}

export class GatewayClient {
  constructor(public readonly baseUrl: string) {}

  listPendingReviews(): Promise<ReviewDto[]> {
    return request(`${this.baseUrl}/api/reviews?status=pending`);
  }

  respond(requestId: string, body: RespondBody): Promise<{ ok: boolean }> {
    return request(`${this.baseUrl}/api/reviews/${requestId}/respond`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  listAgents(): Promise<AgentSummary[]> {
    return request(`${this.baseUrl}/api/agents`);
  }

  freeze(agentId: string): Promise<{ ok: boolean; frozen: boolean }> {
    return request(`${this.baseUrl}/api/agents/${agentId}/freeze`, {
      method: "POST",
    });
  }

  unfreeze(agentId: string): Promise<{ ok: boolean; frozen: boolean }> {
    return request(`${this.baseUrl}/api/agents/${agentId}/unfreeze`, {
      method: "POST",
    });
  }

  budget(agentId: string): Promise<AgentSummary> {
    return request(`${this.baseUrl}/api/budget/${agentId}`);
  }

  async submitAction(action: ActionDto): Promise<string> {
    const body = await request<{ id: string }>(`${this.baseUrl}/api/actions`, {
      method: "POST",
      body: JSON.stringify({ action }),
    });
    return body.id;
  }

  actionOutcome(handle: string): Promise<ActionOutcome> {
    return request(`${this.baseUrl}/api/actions/${handle}`);
  }

  /** Poll until the asynchronous authorize settles. */
  async waitForOutcome(handle: string, timeoutMs = 5000): Promise<ActionOutcome> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const outcome = await this.actionOutcome(handle);
      if (outcome.status !== "pending") return outcome;
      if (Date.now() > deadline) {
        throw new Error(`action ${handle} still pending after ${timeoutMs}ms`);
      }
      await new Promise((resolve) => setTimeout(resolve, 50));
    }
  }

  submitPolicyChange(
    oldPolicy: unknown,
    newPolicy: unknown,
  ): Promise<PolicyChangeSubmitted> {
    return request(`${this.baseUrl}/api/policy-changes`, {
      method: "POST",
      body: JSON.stringify({ old: oldPolicy, new: newPolicy }),
    });
  }

  policyChangeStatus(handle: string): Promise<{ status: string; reason?: string }> {
    return request(`${this.baseUrl}/api/policy-changes/${handle}`);
  }
}
