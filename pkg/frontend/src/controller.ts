// Session state machine. One active task at a time; submissions are
// optimistic and retried verbatim on failure, which is safe because the
// service acknowledges idempotently.

import { ApiClient, ApiError, SessionInfo, Task, Verdict } from "./api.js";

export type SessionState =
  | { phase: "idle" }
  | { phase: "loading" }
  | { phase: "task"; task: Task; submitting: boolean }
  | { phase: "done"; code: string; evaluator: string }
  | { phase: "error"; message: string; retryable: boolean };

export type Answer = "yes" | "no";

export class SessionController {
  private state: SessionState = { phase: "idle" };
  private session = "";
  private campaign = "";
  private evaluator = "";
  private listeners: Array<(state: SessionState) => void> = [];
  private lastAction: (() => Promise<void>) | null = null;

  constructor(private readonly api: ApiClient) {}

  onChange(listener: (state: SessionState) => void): void {
    this.listeners.push(listener);
  }

  current(): SessionState {
    return this.state;
  }

  /** judged / total, in [0, 1]; 1 only when the session is complete. */
  progress(): number {
    const s = this.state;
    if (s.phase === "done") return 1;
    if (s.phase === "task" && s.task.total > 0) return s.task.position / s.task.total;
    return 0;
  }

  private setState(state: SessionState): void {
    this.state = state;
    for (const listener of this.listeners) listener(state);
  }

  private fail(err: unknown, retry: () => Promise<void>): void {
    const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.lastAction = retry;
    this.setState({ phase: "error", message, retryable: true });
  }

  async start(campaign: string, evaluator: string): Promise<void> {
    this.campaign = campaign;
    this.evaluator = evaluator;
    this.setState({ phase: "loading" });
    const action = async () => {
      const info: SessionInfo = await this.api.createSession(evaluator);
      this.session = info.session;
      await this.advance();
    };
    try {
      await action();
    } catch (err) {
      this.fail(err, action);
    }
  }

  private async advance(): Promise<void> {
    const task = await this.api.nextTask(this.campaign, this.session);
    if (task === null) {
      const done = await this.api.completionCode(this.session);
      this.setState({ phase: "done", code: done.code, evaluator: this.evaluator });
    } else {
      this.setState({ phase: "task", task, submitting: false });
    }
  }

  /** Answer the current task: "yes" marks the frame correct. */
  async choose(answer: Answer): Promise<void> {
    const s = this.state;
    if (s.phase !== "task" || s.submitting) return;
    const task = s.task;
    let verdict: Verdict;
    if (task.kind === "followup") {
      // the follow-up asks whether the original frame was more suitable
      verdict = answer === "yes" ? "incorrect_original_better" : "incorrect";
    } else {
      verdict = answer === "yes" ? "correct" : "incorrect";
    }
    this.setState({ phase: "task", task, submitting: true });
    const action = async () => {
      await this.api.submitJudgment(this.session, task.item_id, verdict, task.kind === "followup");
      await this.advance();
    };
    try {
      await action();
    } catch (err) {
      this.fail(err, action);
    }
  }

  /** Re-run the failed call; submissions acknowledge idempotently. */
  async retry(): Promise<void> {
    const action = this.lastAction;
    if (this.state.phase !== "error" || action === null) return;
    this.setState({ phase: "loading" });
    try {
      await action();
    } catch (err) {
      this.fail(err, action);
    }
  }
}
