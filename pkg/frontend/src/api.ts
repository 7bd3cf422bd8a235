// Typed client for the annotation service HTTP API. The service is the
// single source of truth; this client keeps no state beyond the base URL.

export interface TargetSpan {
  start: number;
  end: number;
  text: string;
}

export interface TaskElement {
  name: string;
  text: string;
}

export interface OriginalFrame {
  name: string;
  definition: string;
}

export type CampaignMode = "annotation" | "correctness" | "robustness";

export interface Task {
  kind: "task" | "followup";
  item_id: string;
  sentence: string;
  frame: string;
  target: TargetSpan;
  definition: string;
  elements: TaskElement[];
  mode: CampaignMode;
  position: number;
  total: number;
  original_frame?: OriginalFrame;
}

export interface SessionInfo {
  session: string;
  campaign: string;
  mode: CampaignMode;
  total: number;
  judged: number;
}

export interface Ack {
  ok: boolean;
  item_id: string;
  recorded: string;
  next_available: boolean;
}

export interface CompletionCode {
  code: string;
  evaluator: string;
}

export type Verdict =
  | "correct"
  | "incorrect"
  | "incorrect_original_better"
  | "valid"
  | "invalid"
  | "modify";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function request<T>(url: string, body?: unknown): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, {
      method: body === undefined ? "GET" : "POST",
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  } catch (err) {
    throw new ApiError("network", String(err), 0);
  }
  const payload = (await response.json().catch(() => ({}))) as Record<string, unknown>;
  if (!response.ok) {
    throw new ApiError(
      typeof payload.error === "string" ? payload.error : "error",
      typeof payload.message === "string" ? payload.message : response.statusText,
      response.status,
    );
  }
  return payload as T;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  createSession(evaluator: string): Promise<SessionInfo> {
    return request<SessionInfo>(`${this.base}/api/sessions`, { evaluator });
  }

  /** The current task, or null once every item is judged. */
  async nextTask(campaign: string, session: string): Promise<Task | null> {
    try {
      return await request<Task>(
        `${this.base}/api/campaigns/${encodeURIComponent(campaign)}/next?session=${encodeURIComponent(session)}`,
      );
    } catch (err) {
      if (err instanceof ApiError && err.code === "no_tasks_remaining") {
        return null;
      }
      throw err;
    }
  }

  submitJudgment(
    session: string,
    item: string,
    verdict: Verdict,
    followup = false,
  ): Promise<Ack> {
    return request<Ack>(`${this.base}/api/judgments`, {
      session,
      item,
      verdict,
      followup,
    });
  }

  completionCode(session: string): Promise<CompletionCode> {
    return request<CompletionCode>(
      `${this.base}/api/completion-code?session=${encodeURIComponent(session)}`,
    );
  }

  verifyCode(evaluator: string, code: string): Promise<{ valid: boolean }> {
    return request<{ valid: boolean }>(
      `${this.base}/api/verify-code?evaluator=${encodeURIComponent(evaluator)}&code=${encodeURIComponent(code)}`,
    );
  }
}
