/** App bootstrap: creates a session on load, wires the input form and
 * choice buttons, and refreshes state from the session endpoint after
 * conflicts or page reloads. */

import { ApiClient, ApiError } from "./api.js";
import {
  applyFeedbackResponse,
  applyQueryResponse,
  turnsFromSession,
  type ChatTurnView,
} from "./state.js";
import { renderTranscript, type UiHandlers } from "./ui.js";

declare global {
  interface Window {
    CLARIQ_BASE_URL?: string;
  }
}

const SESSION_KEY = "clariq.session_id";

function baseUrl(): string {
  return window.CLARIQ_BASE_URL ?? "http://127.0.0.1:8080";
}

export function startApp(): void {
  const api = new ApiClient(baseUrl());
  const transcript = document.getElementById("transcript")!;
  const form = document.getElementById("query-form") as HTMLFormElement;
  const input = document.getElementById("query-input") as HTMLInputElement;

  let sessionId = "";
  let turns: ChatTurnView[] = [];
  let error: string | undefined;
  let inFlight = false; // at most one request per session
  let lastAction: (() => void) | undefined;

  const handlers: UiHandlers = {
    onChoice(turnId, choiceId) {
      submitChoice(turnId, choiceId);
    },
    onRetry() {
      error = undefined;
      lastAction?.();
    },
  };

  function render() {
    renderTranscript(transcript, turns, handlers, error);
  }

  async function refreshFromServer() {
    const session = await api.getSession(sessionId);
    turns = turnsFromSession(session);
    render();
  }

  async function submitQuery(text: string) {
    if (inFlight || !text.trim()) return;
    inFlight = true;
    lastAction = () => submitQuery(text);
    try {
      const response = await api.postQuery(sessionId, text);
      turns = applyQueryResponse(turns, text, response);
      error = undefined;
      input.value = "";
    } catch (exc) {
      error = exc instanceof Error ? exc.message : String(exc);
    } finally {
      inFlight = false;
      render();
    }
  }

  async function submitChoice(turnId: number, choiceId: string) {
    if (inFlight) return;
    inFlight = true;
    lastAction = () => submitChoice(turnId, choiceId);
    try {
      const response = await api.postChoice(sessionId, turnId, choiceId);
      turns = applyFeedbackResponse(turns, turnId, choiceId, response);
      error = undefined;
    } catch (exc) {
      if (exc instanceof ApiError && exc.status === 409) {
        // stale turn: someone already answered it; resync
        await refreshFromServer();
        error = undefined;
      } else {
        error = exc instanceof Error ? exc.message : String(exc);
      }
    } finally {
      inFlight = false;
      render();
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitQuery(input.value);
  });

  (async () => {
    const stored = sessionStorage.getItem(SESSION_KEY);
    try {
      if (stored) {
        sessionId = stored;
        await refreshFromServer();
      } else {
        sessionId = await api.createSession();
        sessionStorage.setItem(SESSION_KEY, sessionId);
        render();
      }
    } catch {
      // stored session unknown to the server (restart): start fresh
      sessionId = await api.createSession();
      sessionStorage.setItem(SESSION_KEY, sessionId);
      turns = [];
      render();
    }
  })();
}

startApp();
