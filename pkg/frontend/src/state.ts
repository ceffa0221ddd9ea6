// Pure view-state machinery. All act interpretation comes from server
// envelopes; these helpers only project them for rendering, so a reload
// rebuilt from the server record renders identically.

import type { Envelope, MessageReply, SessionRecord, Survey } from "./api.js";
import { formatCents } from "./format.js";

export interface ViewState {
  sessionId: string;
  scenario: string;
  humanRole: "buyer" | "seller";
  agentRole: "buyer" | "seller";
  status: SessionRecord["status"];
  dealPriceCents: number | null;
  messages: Envelope[];
  survey: Survey | null;
  reservationCents: number | null;
  awaitingReply: boolean;
}

export function fromRecord(record: SessionRecord): ViewState {
  return {
    sessionId: record.session_id,
    scenario: record.scenario,
    humanRole: record.human_role,
    agentRole: record.agent_role,
    status: record.status,
    dealPriceCents: record.deal_price_cents,
    messages: [...record.messages],
    survey: record.survey,
    reservationCents: record.your_reservation_cents ?? null,
    awaitingReply: false,
  };
}

export function applyReply(state: ViewState, reply: MessageReply): ViewState {
  return {
    ...state,
    messages: [...state.messages, ...reply.messages],
    status: reply.status,
    dealPriceCents: reply.deal_price_cents,
    awaitingReply: false,
  };
}

/** Latest act-carrying offer per side; non-offers maintain the previous one. */
export function standingOffers(
  messages: Envelope[]
): { buyer: number | null; seller: number | null } {
  const standing: { buyer: number | null; seller: number | null } = {
    buyer: null,
    seller: null,
  };
  for (const message of messages) {
    if (message.act.kind === "counteroffer" && message.act.price_cents !== null) {
      standing[message.role] = message.act.price_cents;
    } else if (message.act.kind === "accept") {
      const opponent = message.role === "buyer" ? "seller" : "buyer";
      standing[message.role] = standing[opponent];
    }
  }
  return standing;
}

export function whoseTurn(state: ViewState): "buyer" | "seller" {
  const last = state.messages[state.messages.length - 1];
  if (!last) {
    return state.agentRole; // the agent always opens
  }
  return last.role === "buyer" ? "seller" : "buyer";
}

/** Input is enabled only on the human's turn in an active session. */
export function canSend(state: ViewState): boolean {
  return (
    state.status === "active" &&
    !state.awaitingReply &&
    whoseTurn(state) === state.humanRole
  );
}

export function dealBanner(state: ViewState): string | null {
  if (state.status !== "deal" || state.dealPriceCents === null) {
    return null;
  }
  return `Deal at ${formatCents(state.dealPriceCents)}`;
}

export function surveyOpen(state: ViewState): boolean {
  return state.status !== "active" && state.survey === null;
}

export function validateSurvey(quality: number, humanLike: number): string | null {
  for (const [label, value] of [["quality", quality], ["human-likeness", humanLike]] as const) {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      return `${label} rating must be a whole number between 1 and 5`;
    }
  }
  return null;
}
