/** Wire types for the gateway's JSON API. */

export interface ActionDto {
  id: string;
  agent_id: string;
  amount: number;
  to: string;
  chain: string;
  method: string;
  timestamp: number;
  current_balance: number;
}

export type ReviewStatus =
  | "pending"
  | "approved"
  | "rejected"
  | "modified"
  | "expired"
  | "cancelled";

export type Urgency = "low" | "normal" | "high" | "critical";

export type Tier = "review" | "biometric";

export interface ReviewDto {
  id: string;
  action: ActionDto;
  agent_id: string;
  violation_reasons: string[];
  urgency: Urgency;
  created_at: number;
  deadline: number;
  required_tier: Tier;
  status: ReviewStatus;
}

export type EventType =
  | "request_created"
  | "request_approved"
  | "request_rejected"
  | "request_modified"
  | "request_expired"
  | "request_cancelled";

export interface ReviewEvent {
  type: EventType;
  request_id: string;
  timestamp: number;
  payload: ReviewDto;
}

export interface BudgetLimits {
  day: number | null;
  week: number | null;
  month: number | null;
}

export interface AgentSummary {
  agent_id: string;
  totals: { day: number; week: number; month: number };
  limits: Record<string, BudgetLimits>;
  frozen: boolean;
}

export interface ActionOutcome {
  status: "pending" | "executed" | "rejected" | "frozen" | "expired";
  decision?: {
    verdict: string;
    matched_policy_id: string | null;
    failed_checks: Record<string, number[]>;
  } | null;
  review?: {
    request_id: string;
    verdict: string;
    responder: string;
    biometric_confirmed: boolean;
  } | null;
  signature?: string | null;
  ephemeral_address?: string | null;
}

export interface RespondBody {
  verdict: "approve" | "reject" | "modify";
  responder?: string;
  modified_action?: ActionDto;
  biometric_confirmed?: boolean;
}

export interface PolicyChangeSubmitted {
  status: "pending" | "accepted";
  review_request_id?: string;
  required_approval: "none" | "review" | "biometric";
  changes: string[];
}
