import { describe, expect, it } from "vitest";

import type { Envelope, SessionRecord } from "../src/api.js";
import { actBadge, formatCents } from "../src/format.js";
import {
  applyReply,
  canSend,
  dealBanner,
  fromRecord,
  standingOffers,
  surveyOpen,
  validateSurvey,
  whoseTurn,
} from "../src/state.js";

function envelope(
  role: "buyer" | "seller",
  kind: Envelope["act"]["kind"],
  price: number | null = null,
  turn = 0
): Envelope {
  return { session: "s", role, text: "...", act: { kind, price_cents: price }, turn };
}

function record(overrides: Partial<SessionRecord> = {}): SessionRecord {
  return {
    session_id: "abc123",
    scenario: "used_car",
    human_role: "buyer",
    agent_role: "seller",
    status: "active",
    deal_price_cents: null,
    messages: [envelope("seller", "counteroffer", 1475000)],
    survey: null,
    your_reservation_cents: 1350000,
    ...overrides,
  };
}

describe("formatCents", () => {
  it("renders whole dollars with grouping", () => {
    expect(formatCents(1475000)).toBe("$14,750");
    expect(formatCents(1300000)).toBe("$13,000");
  });

  it("keeps cents when present", () => {
    expect(formatCents(1300050)).toBe("$13,000.50");
  });
});

describe("actBadge", () => {
  it("labels counteroffers with their price", () => {
    expect(actBadge({ kind: "counteroffer", price_cents: 1300000 })).toBe(
      "counteroffer $13,000"
    );
  });

  it("labels other acts by kind", () => {
    expect(actBadge({ kind: "accept", price_cents: null })).toBe("accept");
    expect(actBadge({ kind: "no_counteroffer", price_cents: null })).toBe(
      "no counteroffer"
    );
  });
});

describe("standingOffers", () => {
  it("tracks the latest counteroffer per side", () => {
    const offers = standingOffers([
      envelope("seller", "counteroffer", 1475000),
      envelope("buyer", "counteroffer", 1200000),
      envelope("seller", "counteroffer", 1390000),
    ]);
    expect(offers).toEqual({ seller: 1390000, buyer: 1200000 });
  });

  it("non-offers maintain the previous position", () => {
    const offers = standingOffers([
      envelope("seller", "counteroffer", 1475000),
      envelope("buyer", "no_counteroffer"),
    ]);
    expect(offers).toEqual({ seller: 1475000, buyer: null });
  });

  it("accept mirrors the opponent's standing offer", () => {
    const offers = standingOffers([
      envelope("seller", "counteroffer", 1300000),
      envelope("buyer", "accept"),
    ]);
    expect(offers).toEqual({ seller: 1300000, buyer: 1300000 });
  });
});

describe("turn and send gating", () => {
  it("human may send after the agent's opening", () => {
    const state = fromRecord(record());
    expect(whoseTurn(state)).toBe("buyer");
    expect(canSend(state)).toBe(true);
  });

  it("input disabled while awaiting the reply", () => {
    const state = { ...fromRecord(record()), awaitingReply: true };
    expect(canSend(state)).toBe(false);
  });

  it("input disabled on terminal sessions", () => {
    const state = fromRecord(record({ status: "deal", deal_price_cents: 1300000 }));
    expect(canSend(state)).toBe(false);
  });

  it("input disabled when it is not the human's turn", () => {
    const state = fromRecord(
      record({
        messages: [
          envelope("seller", "counteroffer", 1475000),
          envelope("buyer", "counteroffer", 1200000),
        ],
      })
    );
    expect(whoseTurn(state)).toBe("seller");
    expect(canSend(state)).toBe(false);
  });
});

describe("applyReply", () => {
  it("appends both envelopes and updates status", () => {
    const state = fromRecord(record());
    const next = applyReply(state, {
      messages: [
        envelope("buyer", "counteroffer", 1300000, 1),
        envelope("seller", "accept", null, 2),
      ],
      status: "deal",
      deal_price_cents: 1300000,
    });
    expect(next.messages).toHaveLength(3);
    expect(next.status).toBe("deal");
    expect(dealBanner(next)).toBe("Deal at $13,000");
  });
});

describe("survey", () => {
  it("opens once the session is terminal and unanswered", () => {
    const active = fromRecord(record());
    const done = fromRecord(record({ status: "deal", deal_price_cents: 1300000 }));
    expect(surveyOpen(active)).toBe(false);
    expect(surveyOpen(done)).toBe(true);
  });

  it("stays closed after an answer exists", () => {
    const state = fromRecord(
      record({
        status: "deal",
        deal_price_cents: 1300000,
        survey: { quality: 5, human_like: 4, comments: "" },
      })
    );
    expect(surveyOpen(state)).toBe(false);
  });

  it("validates the 1-5 range", () => {
    expect(validateSurvey(5, 4)).toBeNull();
    expect(validateSurvey(6, 4)).toMatch(/quality/);
    expect(validateSurvey(3, 0)).toMatch(/human-likeness/);
    expect(validateSurvey(2.5, 3)).toMatch(/whole number/);
  });
});
