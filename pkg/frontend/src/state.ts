/** Pure transcript state: derived from server responses and fully
 * reconstructible from GET /v1/sessions/{id} (refresh-safe). */

import type {
  ChoiceDto,
  FeedbackResponseDto,
  QueryResponseDto,
  SessionDto,
  TurnDto,
} from "./types.js";

export interface EvidenceBadge {
  agentId: string;
  detected: boolean;
  status: string;
}

export interface ClarificationView {
  question: string;
  choices: ChoiceDto[];
  selectedChoice?: string;
}

export interface ChatTurnView {
  turnId: number;
  query: string;
  status: "clarification" | "answered" | "abandoned" | "failed";
  clarification?: ClarificationView;
  refinedQuery?: string;
  answer?: string;
  evidenceBadges: EvidenceBadge[];
}

/** Choice buttons are active only while the clarification has no
 * selection and the turn is still pending. */
export function canSubmitFeedback(turn: ChatTurnView): boolean {
  return (
    turn.status === "clarification" &&
    turn.clarification !== undefined &&
    turn.clarification.selectedChoice === undefined
  );
}

function badgesFrom(agents: TurnDto["agents"]): EvidenceBadge[] {
  return agents.map((a) => ({
    agentId: a.agent_id,
    detected: a.detected,
    status: a.status,
  }));
}

export function turnFromDto(dto: TurnDto): ChatTurnView {
  const turn: ChatTurnView = {
    turnId: dto.turn_id,
    query: dto.query,
    status: dto.status,
    evidenceBadges: badgesFrom(dto.agents),
  };
  if (dto.question) {
    turn.clarification = {
      question: dto.question.text,
      choices: dto.question.choices,
      selectedChoice: dto.feedback?.choice_id,
    };
  }
  if (dto.refined_query) turn.refinedQuery = dto.refined_query;
  if (dto.answer) turn.answer = dto.answer;
  return turn;
}

/** Rebuild the full transcript from the session endpoint. */
export function turnsFromSession(session: SessionDto): ChatTurnView[] {
  return session.turns.map(turnFromDto);
}

/** Append the turn created by POST /query; a pending clarification is
 * superseded server-side, so mark it abandoned locally too. */
export function applyQueryResponse(
  turns: ChatTurnView[],
  query: string,
  response: QueryResponseDto,
): ChatTurnView[] {
  const updated = turns.map((t) =>
    canSubmitFeedback(t) ? { ...t, status: "abandoned" as const } : t,
  );
  const turn: ChatTurnView = {
    turnId: response.turn_id,
    query,
    status: response.status === "answer" ? "answered" : "clarification",
    evidenceBadges: badgesFrom(response.evidence),
  };
  if (response.status === "clarification") {
    turn.clarification = {
      question: response.question ?? "",
      choices: response.choices ?? [],
    };
  } else {
    turn.answer = response.answer;
  }
  return [...updated, turn];
}

/** Record a feedback result against its turn; no-op for unknown turns. */
export function applyFeedbackResponse(
  turns: ChatTurnView[],
  turnId: number,
  selectedChoice: string | undefined,
  response: FeedbackResponseDto,
): ChatTurnView[] {
  return turns.map((t) => {
    if (t.turnId !== turnId || !t.clarification) return t;
    return {
      ...t,
      status: "answered" as const,
      clarification: { ...t.clarification, selectedChoice },
      refinedQuery: response.refined_query,
      answer: response.answer,
    };
  });
}
