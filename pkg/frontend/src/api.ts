// Typed client for the negotiation service. The UI never interprets message
// text itself: every message carries the server-extracted act.

export interface Act {
  kind: "no_counteroffer" | "counteroffer" | "accept" | "reject";
  price_cents: number | null;
}

export interface Envelope {
  session: string;
  role: "buyer" | "seller";
  text: string;
  act: Act;
  turn: number;
}

export interface SessionRecord {
  session_id: string;
  scenario: string;
  human_role: "buyer" | "seller";
  agent_role: "buyer" | "seller";
  status: "active" | "deal" | "no_deal" | "abandoned";
  deal_price_cents: number | null;
  messages: Envelope[];
  survey: Survey | null;
  your_reservation_cents?: number;
}

export interface MessageReply {
  messages: Envelope[];
  status: SessionRecord["status"];
  deal_price_cents: number | null;
}

export interface Survey {
  quality: number;
  human_like: number;
  comments: string;
}

export interface ScenarioInfo {
  name: string;
  initial_price_range_cents: [number, number];
  currency: string;
}

export class ApiError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}

let baseUrl = "http://127.0.0.1:8790";

export function setBaseUrl(url: string): void {
  baseUrl = url.replace(/\/$/, "");
}

export function getBaseUrl(): string {
  return baseUrl;
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(`${baseUrl}${path}`, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const code = (body as { code?: string }).code ?? "error";
    const message = (body as { message?: string }).message ?? response.statusText;
    throw new ApiError(code, message, response.status);
  }
  return body as T;
}

export function listScenarios(): Promise<{ scenarios: ScenarioInfo[] }> {
  return request("/v1/scenarios");
}

export function createSession(
  scenario: string,
  humanRole: "buyer" | "seller"
): Promise<SessionRecord> {
  return request("/v1/sessions", {
    method: "POST",
    body: JSON.stringify({ scenario, human_role: humanRole }),
  });
}

export function sendMessage(sessionId: string, text: string): Promise<MessageReply> {
  return request(`/v1/sessions/${sessionId}/messages`, {
    method: "POST",
    body: JSON.stringify({ text }),
  });
}

export function getTranscript(sessionId: string): Promise<SessionRecord> {
  return request(`/v1/sessions/${sessionId}`);
}

export function submitSurvey(sessionId: string, survey: Survey): Promise<SessionRecord> {
  return request(`/v1/sessions/${sessionId}/survey`, {
    method: "POST",
    body: JSON.stringify(survey),
  });
}

export function abandonSession(sessionId: string): Promise<SessionRecord> {
  return request(`/v1/sessions/${sessionId}/abandon`, { method: "POST" });
}
