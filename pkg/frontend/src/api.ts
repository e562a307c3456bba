/** Thin fetch client for the clarification service. */

import type {
  FeedbackResponseDto,
  QueryResponseDto,
  SessionDto,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep statusText
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  async createSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("/v1/sessions", {
      method: "POST",
    });
    return body.session_id;
  }

  getSession(sessionId: string): Promise<SessionDto> {
    return this.request<SessionDto>(`/v1/sessions/${sessionId}`);
  }

  postQuery(sessionId: string, text: string): Promise<QueryResponseDto> {
    return this.request<QueryResponseDto>(`/v1/sessions/${sessionId}/query`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  postChoice(
    sessionId: string,
    turnId: number,
    choiceId: string,
  ): Promise<FeedbackResponseDto> {
    return this.request<FeedbackResponseDto>(
      `/v1/sessions/${sessionId}/turns/${turnId}/feedback`,
      { method: "POST", body: JSON.stringify({ choice_id: choiceId }) },
    );
  }

  postFreeText(
    sessionId: string,
    turnId: number,
    freeText: string,
  ): Promise<FeedbackResponseDto> {
    return this.request<FeedbackResponseDto>(
      `/v1/sessions/${sessionId}/turns/${turnId}/feedback`,
      { method: "POST", body: JSON.stringify({ free_text: freeText }) },
    );
  }
}
