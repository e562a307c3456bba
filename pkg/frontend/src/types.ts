/** Wire types for the clarification service's JSON API. */

export interface ChoiceDto {
  id: string;
  label: string;
  payload: string;
}

export interface AgentEvidenceDto {
  agent_id: string;
  status: string;
  detected: boolean;
  evidence?: {
    kind: string;
    category: string | null;
    candidates: { id: string; label: string }[];
    rationale: string;
  };
}

export interface QueryResponseDto {
  status: "clarification" | "answer";
  turn_id: number;
  question?: string;
  choices?: ChoiceDto[];
  answer?: string;
  evidence: AgentEvidenceDto[];
}

export interface FeedbackResponseDto {
  refined_query: string;
  answer: string;
}

export interface TurnDto {
  turn_id: number;
  query: string;
  status: "clarification" | "answered" | "abandoned" | "failed";
  question?: { text: string; choices: ChoiceDto[] };
  feedback?: { choice_id?: string; free_text?: string };
  refined_query?: string;
  answer?: string;
  agents: AgentEvidenceDto[];
}

export interface SessionDto {
  session_id: string;
  turns: TurnDto[];
}
