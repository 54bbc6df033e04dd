import type {
  AnswerResponse,
  DemographicsRequest,
  DemographicsResponse,
  NextResponse,
  ResultResponse,
} from "./types";

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

async function parseJson(response: Response): Promise<unknown> {
  const text = await response.text();
  return text ? JSON.parse(text) : {};
}

/**
 * Thin client over the backend's five participant endpoints. The UI never
 * derives predictions or BMI itself; everything shown comes from here.
 */
export class QuizApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await parseJson(response)) as Record<string, unknown>;
    if (!response.ok) {
      const detail = typeof payload.detail === "string" ? payload.detail : response.statusText;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  async createSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("POST", "/api/sessions");
    return body.session_id;
  }

  nextQuestion(sessionId: string): Promise<NextResponse> {
    return this.request("GET", `/api/sessions/${sessionId}/next`);
  }

  submitAnswer(sessionId: string, questionId: string, choiceIndex: number): Promise<AnswerResponse> {
    return this.request("POST", `/api/sessions/${sessionId}/answers`, {
      question_id: questionId,
      choice_index: choiceIndex,
    });
  }

  result(sessionId: string): Promise<ResultResponse> {
    return this.request("GET", `/api/sessions/${sessionId}/result`);
  }

  submitDemographics(sessionId: string, body: DemographicsRequest): Promise<DemographicsResponse> {
    return this.request("POST", `/api/sessions/${sessionId}/demographics`, body);
  }
}
