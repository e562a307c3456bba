/** DOM rendering for the chat transcript. Framework-free: the whole
 * transcript re-renders from state on every change. */

import { canSubmitFeedback, type ChatTurnView } from "./state.js";

export interface UiHandlers {
  onChoice(turnId: number, choiceId: string): void;
  onRetry(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderBadges(turn: ChatTurnView): HTMLElement {
  const row = el("div", "badges");
  for (const badge of turn.evidenceBadges) {
    const cls = badge.detected ? "badge detected" : `badge ${badge.status}`;
    const label = badge.detected ? `${badge.agentId} ✓` : badge.agentId;
    row.appendChild(el("span", cls, label));
  }
  return row;
}

function renderClarification(turn: ChatTurnView, handlers: UiHandlers): HTMLElement {
  const bubble = el("div", "bubble assistant clarification");
  const clarification = turn.clarification!;
  bubble.appendChild(el("p", "question", clarification.question));
  const buttons = el("div", "choices");
  const active = canSubmitFeedback(turn);
  for (const choice of clarification.choices) {
    const button = el("button", "choice", choice.label);
    button.disabled = !active;
    if (clarification.selectedChoice === choice.id) {
      button.classList.add("selected");
    }
    if (active) {
      button.addEventListener("click", () => handlers.onChoice(turn.turnId, choice.id));
    }
    buttons.appendChild(button);
  }
  bubble.appendChild(buttons);
  return bubble;
}

export function renderTurn(turn: ChatTurnView, handlers: UiHandlers): HTMLElement {
  const wrap = el("div", `turn ${turn.status}`);
  wrap.dataset.turnId = String(turn.turnId);
  wrap.appendChild(el("div", "bubble user", turn.query));
  wrap.appendChild(renderBadges(turn));
  if (turn.clarification) {
    wrap.appendChild(renderClarification(turn, handlers));
  }
  if (turn.refinedQuery) {
    wrap.appendChild(el("div", "refined", `refined: ${turn.refinedQuery}`));
  }
  if (turn.answer) {
    wrap.appendChild(el("div", "bubble assistant answer", turn.answer));
  }
  if (turn.status === "failed") {
    wrap.appendChild(el("div", "bubble error", "The assistant failed on this turn."));
  }
  return wrap;
}

export function renderTranscript(
  container: HTMLElement,
  turns: ChatTurnView[],
  handlers: UiHandlers,
  error?: string,
): void {
  container.replaceChildren();
  for (const turn of turns) {
    container.appendChild(renderTurn(turn, handlers));
  }
  if (error) {
    const bubble = el("div", "bubble error", error + " ");
    const retry = el("button", "retry", "Retry");
    retry.addEventListener("click", () => handlers.onRetry());
    bubble.appendChild(retry);
    container.appendChild(bubble);
  }
  container.scrollTop = container.scrollHeight;
}
