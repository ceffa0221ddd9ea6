// DOM wiring for the negotiation chat client.

import {
  ApiError,
  createSession,
  getTranscript,
  listScenarios,
  sendMessage,
  setBaseUrl,
  submitSurvey,
  type Envelope,
} from "./api.js";
import { actBadge, formatCents } from "./format.js";
import {
  applyReply,
  canSend,
  dealBanner,
  fromRecord,
  standingOffers,
  surveyOpen,
  validateSurvey,
  type ViewState,
} from "./state.js";

const el = {
  setup: document.getElementById("setup") as HTMLFormElement,
  scenario: document.getElementById("scenario") as HTMLSelectElement,
  role: document.getElementById("role") as HTMLSelectElement,
  chat: document.getElementById("chat") as HTMLElement,
  messages: document.getElementById("messages") as HTMLElement,
  banner: document.getElementById("banner") as HTMLElement,
  errors: document.getElementById("errors") as HTMLElement,
  offers: document.getElementById("offers") as HTMLElement,
  reservation: document.getElementById("reservation") as HTMLElement,
  composer: document.getElementById("composer") as HTMLFormElement,
  input: document.getElementById("input") as HTMLInputElement,
  send: document.getElementById("send") as HTMLButtonElement,
  surveyForm: document.getElementById("survey") as HTMLFormElement,
  quality: document.getElementById("quality") as HTMLInputElement,
  humanLike: document.getElementById("human-like") as HTMLInputElement,
  comments: document.getElementById("comments") as HTMLTextAreaElement,
  surveyStatus: document.getElementById("survey-status") as HTMLElement,
};

let state: ViewState | null = null;

const params = new URLSearchParams(window.location.search);
const apiOverride = params.get("api");
if (apiOverride) {
  setBaseUrl(apiOverride);
}

function showError(message: string, retry?: () => void): void {
  el.errors.textContent = message;
  el.errors.hidden = false;
  if (retry) {
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = "Retry";
    button.onclick = () => {
      el.errors.hidden = true;
      retry();
    };
    el.errors.append(" ");
    el.errors.appendChild(button);
  }
}

function clearError(): void {
  el.errors.hidden = true;
  el.errors.textContent = "";
}

function renderMessage(message: Envelope, humanRole: string): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = `bubble ${message.role === humanRole ? "mine" : "theirs"}`;
  const text = document.createElement("p");
  text.textContent = message.text;
  const badge = document.createElement("span");
  badge.className = "badge";
  badge.textContent = `${message.role}: ${actBadge(message.act)}`;
  bubble.appendChild(text);
  bubble.appendChild(badge);
  return bubble;
}

function render(): void {
  if (!state) {
    return;
  }
  el.setup.hidden = true;
  el.chat.hidden = false;

  el.messages.replaceChildren(
    ...state.messages.map((m) => renderMessage(m, state!.humanRole))
  );
  el.messages.scrollTop = el.messages.scrollHeight;

  const standing = standingOffers(state.messages);
  el.offers.textContent =
    `Seller asks: ${standing.seller !== null ? formatCents(standing.seller) : "-"}` +
    ` | Buyer bids: ${standing.buyer !== null ? formatCents(standing.buyer) : "-"}`;
  if (state.reservationCents !== null) {
    el.reservation.textContent =
      `You are the ${state.humanRole}. Private reservation: ${formatCents(state.reservationCents)}`;
  }

  const banner = dealBanner(state);
  if (banner) {
    el.banner.textContent = banner;
    el.banner.hidden = false;
  } else if (state.status !== "active") {
    el.banner.textContent = `Session ${state.status.replace("_", " ")}`;
    el.banner.hidden = false;
  } else {
    el.banner.hidden = true;
  }

  const enabled = canSend(state);
  el.input.disabled = !enabled;
  el.send.disabled = !enabled;

  el.surveyForm.hidden = !(surveyOpen(state) || state.survey !== null);
  if (state.survey !== null) {
    el.quality.value = String(state.survey.quality);
    el.humanLike.value = String(state.survey.human_like);
    el.comments.value = state.survey.comments;
    for (const field of [el.quality, el.humanLike, el.comments]) {
      field.disabled = true;
    }
    (el.surveyForm.querySelector("button") as HTMLButtonElement).disabled = true;
    el.surveyStatus.textContent = "Survey recorded. Thank you!";
  }
}

async function startSession(scenario: string, role: "buyer" | "seller"): Promise<void> {
  clearError();
  try {
    const record = await createSession(scenario, role);
    state = fromRecord(record);
    const url = new URL(window.location.href);
    url.searchParams.set("session", record.session_id);
    window.history.replaceState(null, "", url.toString());
    render();
  } catch (err) {
    const why = err instanceof ApiError ? err.message : "service unreachable";
    showError(`Could not start the session: ${why}`, () => startSession(scenario, role));
  }
}

async function restoreSession(sessionId: string): Promise<void> {
  try {
    const record = await getTranscript(sessionId);
    state = fromRecord(record);
    render();
  } catch {
    showError("Could not restore the session from the URL.");
  }
}

el.setup.addEventListener("submit", (event) => {
  event.preventDefault();
  void startSession(el.scenario.value, el.role.value as "buyer" | "seller");
});

el.composer.addEventListener("submit", async (event) => {
  event.preventDefault();
  if (!state || !canSend(state)) {
    return;
  }
  const text = el.input.value.trim();
  if (!text) {
    return; // empty sends are blocked client-side
  }
  state = { ...state, awaitingReply: true };
  render();
  clearError();
  try {
    const reply = await sendMessage(state.sessionId, text);
    state = applyReply(state, reply);
    el.input.value = "";
  } catch (err) {
    state = { ...state, awaitingReply: false };
    const why = err instanceof ApiError ? err.message : "service unreachable";
    showError(why);
  }
  render();
});

el.surveyForm.addEventListener("submit", async (event) => {
  event.preventDefault();
  if (!state || state.survey !== null) {
    return;
  }
  const quality = Number(el.quality.value);
  const humanLike = Number(el.humanLike.value);
  const invalid = validateSurvey(quality, humanLike);
  if (invalid) {
    el.surveyStatus.textContent = invalid;
    return;
  }
  try {
    const record = await submitSurvey(state.sessionId, {
      quality,
      human_like: humanLike,
      comments: el.comments.value,
    });
    state = fromRecord(record);
    render();
  } catch (err) {
    const why = err instanceof ApiError ? err.message : "service unreachable";
    el.surveyStatus.textContent = `Could not save the survey: ${why}`;
  }
});

async function init(): Promise<void> {
  try {
    const { scenarios } = await listScenarios();
    el.scenario.replaceChildren(
      ...scenarios.map((s) => {
        const option = document.createElement("option");
        option.value = s.name;
        option.textContent = s.name;
        return option;
      })
    );
  } catch {
    showError("Negotiation service unreachable.", init);
    return;
  }
  const existing = params.get("session");
  if (existing) {
    await restoreSession(existing);
  }
}

void init();
