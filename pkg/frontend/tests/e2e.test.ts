// End-to-end flow against the real negotiation service: UI client -> HTTP
// service -> agent, through a scripted human turn sequence that ends in
// "Deal at $13,000", with the survey persisted and the transcript replaying
// byte-identically after a service restart.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  createSession,
  getTranscript,
  listScenarios,
  sendMessage,
  setBaseUrl,
  submitSurvey,
} from "../src/api.js";
import { applyReply, canSend, dealBanner, fromRecord, standingOffers } from "../src/state.js";

const PORT = 8971;
const DATA_DIR = mkdtempSync(join(tmpdir(), "fairbargain-e2e-"));

let service: ChildProcess | null = null;

function startService(): ChildProcess {
  return spawn(
    "python3",
    [
      "-m",
      "fairbargain.cli",
      "serve",
      "--port",
      String(PORT),
      "--host",
      "127.0.0.1",
      "--data-dir",
      DATA_DIR,
    ],
    { cwd: join(__dirname, "..", ".."), stdio: "ignore" }
  );
}

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 60; attempt++) {
    try {
      await listScenarios();
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }
  throw new Error("service did not come up");
}

async function stopService(): Promise<void> {
  if (service) {
    service.kill("SIGTERM");
    await new Promise((resolve) => setTimeout(resolve, 400));
    service = null;
  }
}

beforeAll(async () => {
  setBaseUrl(`http://127.0.0.1:${PORT}`);
  service = startService();
  await waitForService();
}, 30000);

afterAll(async () => {
  await stopService();
});

describe("live session flow", () => {
  let sessionId = "";

  it("opens with the seller's anchor offer", async () => {
    const record = await createSession("used_car", "buyer");
    sessionId = record.session_id;
    const state = fromRecord(record);
    expect(state.messages).toHaveLength(1);
    expect(state.messages[0].role).toBe("seller");
    expect(state.messages[0].text).toContain("$14,750");
    expect(state.messages[0].act.kind).toBe("counteroffer");
    expect(canSend(state)).toBe(true);
  });

  it("plays a scripted turn sequence to a fair deal", async () => {
    let state = fromRecord(await getTranscript(sessionId));
    const script = [
      "Hi! Would $12,000 work for you?",
      "I could stretch to $12,400.",
      "How about $12,700?",
      "Let's settle at $13,000.",
    ];
    for (const line of script) {
      expect(canSend(state)).toBe(true);
      const reply = await sendMessage(sessionId, line);
      state = applyReply(state, reply);
      if (state.status !== "active") {
        break;
      }
    }
    expect(state.status).toBe("deal");
    expect(dealBanner(state)).toBe("Deal at $13,000");
    expect(canSend(state)).toBe(false);

    const standing = standingOffers(state.messages);
    expect(standing.seller).toBe(1300000);
    // badges come straight from server-extracted acts
    const lastHuman = [...state.messages].reverse().find((m) => m.role === "buyer");
    expect(lastHuman?.act.kind === "counteroffer" || lastHuman?.act.kind === "accept").toBe(true);
  });

  it("persists the survey", async () => {
    const record = await submitSurvey(sessionId, {
      quality: 5,
      human_like: 4,
      comments: "solid negotiator",
    });
    expect(record.survey).toEqual({
      quality: 5,
      human_like: 4,
      comments: "solid negotiator",
    });
  });

  it("replays the transcript identically after a service restart", async () => {
    const before = await getTranscript(sessionId);
    await stopService();
    service = startService();
    await waitForService();
    const after = await getTranscript(sessionId);
    expect(after).toEqual(before);
    expect(after.status).toBe("deal");
    expect(after.deal_price_cents).toBe(1300000);
    expect(after.survey?.quality).toBe(5);
  }, 30000);
});
