/**
 * Typed client for the grading service. The UI only ever talks to these
 * three endpoints; every verdict it renders comes from a grade response.
 */

export interface QuestionSummary {
  id: string;
  title: string;
  reference_source: string;
  entry_point: string;
  arity: number;
  param_names: string[];
  tags: string[];
}

export interface TestRow {
  test_index: number;
  status: string; // pass | wrong_output | runtime_error | timeout | load_error
  args: unknown[];
  actual: unknown;
  error_text: string | null;
}

export interface SamplePayload {
  sample_index: number;
  source: string | null;
  extraction_error: string | null;
  passed: boolean;
  tests: TestRow[] | null;
}

export interface GradePayload {
  question_id: string;
  strategy: string;
  verdict: "correct" | "incorrect";
  samples: SamplePayload[];
  timing_ms: number;
}

export interface HealthPayload {
  status: string;
  gateway_mode: string;
  bank_version: string;
  selftest: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

declare global {
  interface Window {
    __CGBG_API_BASE__?: string;
  }
}

let apiBase: string =
  (typeof window !== "undefined" && window.__CGBG_API_BASE__) ||
  (import.meta.env?.VITE_CGBG_API_BASE as string | undefined) ||
  "";

/** Override the service base URL (tests, runtime config). */
export function setApiBase(base: string): void {
  apiBase = base.replace(/\/+$/, "");
}

export function getApiBase(): string {
  return apiBase;
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const reply = await fetch(`${apiBase}${path}`, init);
  if (!reply.ok) {
    let message = `request failed (${reply.status})`;
    try {
      const body = (await reply.json()) as { error?: string };
      if (body.error) message = body.error;
    } catch {
      // non-JSON error body; keep the generic message
    }
    throw new ApiError(reply.status, message);
  }
  return (await reply.json()) as T;
}

export function fetchQuestions(): Promise<QuestionSummary[]> {
  return request<QuestionSummary[]>("/api/v1/questions");
}

export function fetchHealth(): Promise<HealthPayload> {
  return request<HealthPayload>("/healthz");
}

export function submitGrade(
  questionId: string,
  responseText: string,
  strategy?: string,
): Promise<GradePayload> {
  return request<GradePayload>("/api/v1/grade", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({
      question_id: questionId,
      response_text: responseText,
      ...(strategy ? { strategy } : {}),
    }),
  });
}
