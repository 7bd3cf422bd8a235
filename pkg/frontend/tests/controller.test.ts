import assert from "node:assert/strict";
import { test } from "node:test";

import { Ack, ApiClient, ApiError, SessionInfo, Task } from "../src/api.js";
import { SessionController } from "../src/controller.js";

// Scripted stand-in for the service: a fixed task sequence with the same
// follow-up and idempotency semantics.
class StubApi {
  judgments: Array<{ item: string; verdict: string; followup: boolean }> = [];
  failNext = 0;
  private cursor = 0;
  private pendingFollowup: Task | null = null;

  constructor(private tasks: Task[]) {}

  async createSession(evaluator: string): Promise<SessionInfo> {
    return { session: `tok-${evaluator}`, campaign: "c", mode: "correctness", total: this.tasks.length, judged: 0 };
  }

  async nextTask(): Promise<Task | null> {
    if (this.pendingFollowup) return this.pendingFollowup;
    return this.tasks[this.cursor] ?? null;
  }

  async submitJudgment(
    _session: string,
    item: string,
    verdict: string,
    followup = false,
  ): Promise<Ack> {
    if (this.failNext > 0) {
      this.failNext--;
      throw new ApiError("network", "connection dropped", 0);
    }
    this.judgments.push({ item, verdict, followup });
    if (this.pendingFollowup) {
      assert.ok(followup, "follow-up answer must carry the followup flag");
      this.pendingFollowup = null;
      this.cursor++;
    } else if (verdict === "incorrect" && this.tasks[this.cursor]?.original_frame) {
      this.pendingFollowup = {
        ...this.tasks[this.cursor]!,
        kind: "followup",
      };
    } else {
      this.cursor++;
    }
    return { ok: true, item_id: item, recorded: verdict, next_available: this.cursor < this.tasks.length };
  }

  async completionCode(): Promise<{ code: string; evaluator: string }> {
    assert.equal(this.cursor, this.tasks.length);
    return { code: "stubcode12ab", evaluator: "e" };
  }
}

function makeTask(id: string, withOriginal = false): Task {
  return {
    kind: "task",
    item_id: id,
    sentence: `sentence for ${id}`,
    frame: "Using",
    target: { start: 0, end: 8, text: "sentence" },
    definition: "def",
    elements: [],
    mode: "correctness",
    position: 0,
    total: 2,
    original_frame: withOriginal ? { name: "Arriving", definition: "odef" } : undefined,
  };
}

function controllerWith(tasks: Task[]): { controller: SessionController; api: StubApi } {
  const api = new StubApi(tasks);
  const controller = new SessionController(api as unknown as ApiClient);
  return { controller, api };
}

test("runs a session to completion", async () => {
  const { controller, api } = controllerWith([makeTask("a"), makeTask("b")]);
  await controller.start("c", "e");
  assert.equal(controller.current().phase, "task");
  await controller.choose("yes");
  await controller.choose("yes");
  const state = controller.current();
  assert.equal(state.phase, "done");
  assert.equal(state.phase === "done" ? state.code : "", "stubcode12ab");
  assert.deepEqual(
    api.judgments.map((j) => j.verdict),
    ["correct", "correct"],
  );
});

test("incorrect triggers the follow-up and maps yes to original_better", async () => {
  const { controller, api } = controllerWith([makeTask("a", true)]);
  await controller.start("c", "e");
  await controller.choose("no");
  let state = controller.current();
  assert.equal(state.phase, "task");
  assert.equal(state.phase === "task" ? state.task.kind : "", "followup");

  await controller.choose("yes");
  state = controller.current();
  assert.equal(state.phase, "done");
  assert.deepEqual(api.judgments, [
    { item: "a", verdict: "incorrect", followup: false },
    { item: "a", verdict: "incorrect_original_better", followup: true },
  ]);
});

test("followup no keeps the plain incorrect verdict", async () => {
  const { controller, api } = controllerWith([makeTask("a", true)]);
  await controller.start("c", "e");
  await controller.choose("no");
  await controller.choose("no");
  assert.deepEqual(api.judgments.at(-1), { item: "a", verdict: "incorrect", followup: true });
});

test("failed submission surfaces a retryable error and retries verbatim", async () => {
  const { controller, api } = controllerWith([makeTask("a")]);
  await controller.start("c", "e");
  api.failNext = 1;
  await controller.choose("yes");
  const failed = controller.current();
  assert.equal(failed.phase, "error");
  assert.ok(failed.phase === "error" && failed.retryable);

  await controller.retry();
  assert.equal(controller.current().phase, "done");
  assert.deepEqual(api.judgments, [{ item: "a", verdict: "correct", followup: false }]);
});

test("progress runs from zero to one", async () => {
  const { controller } = controllerWith([
    { ...makeTask("a"), position: 0, total: 2 },
    { ...makeTask("b"), position: 1, total: 2 },
  ]);
  await controller.start("c", "e");
  assert.equal(controller.progress(), 0);
  await controller.choose("yes");
  assert.equal(controller.progress(), 0.5);
  await controller.choose("yes");
  assert.equal(controller.progress(), 1);
});
