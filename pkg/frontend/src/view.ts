// Pure view layer: state in, a plain node tree out. main.ts turns the tree
// into real DOM; tests assert on the tree directly.

import { Task } from "./api.js";
import { Answer, SessionState } from "./controller.js";

export interface VNode {
  tag: string;
  className?: string;
  text?: string;
  attrs?: Record<string, string>;
  children?: VNode[];
  onClick?: () => void;
}

export interface Actions {
  choose(answer: Answer): void;
  retry(): void;
}

function el(tag: string, className: string, text?: string, children?: VNode[]): VNode {
  return { tag, className, text, children };
}

/**
 * Split the sentence around the target using the service-provided character
 * offsets verbatim; the client never re-tokenizes.
 */
export function sentenceSegments(
  sentence: string,
  target: { start: number; end: number },
): { before: string; highlight: string; after: string } {
  return {
    before: sentence.slice(0, target.start),
    highlight: sentence.slice(target.start, target.end),
    after: sentence.slice(target.end),
  };
}

function renderSentenceLine(task: Task): VNode {
  const segments = sentenceSegments(task.sentence, task.target);
  return el("p", "sentence", undefined, [
    el("span", "dot dot-sentence", "●"),
    el("span", "plain", segments.before),
    el("mark", "target-highlight", segments.highlight),
    el("span", "plain", segments.after),
  ]);
}

function renderFrameLine(task: Task): VNode {
  return el("p", "frame-line", undefined, [
    el("span", "dot dot-frame", "●"),
    el("span", "frame-name", task.frame),
    el("span", "frame-target", task.target.text),
    el("span", "frame-definition", task.definition),
  ]);
}

function renderElements(task: Task): VNode | null {
  if (task.elements.length === 0) return null;
  return el(
    "ul",
    "elements",
    undefined,
    task.elements.map((fe) => el("li", "element", `${fe.name}: ${fe.text}`)),
  );
}

function renderQuestion(task: Task, actions: Actions): VNode[] {
  const nodes: VNode[] = [];
  if (task.kind === "followup" && task.original_frame) {
    nodes.push(
      el("p", "original-line", undefined, [
        el("span", "dot dot-original", "●"),
        el("span", "frame-name", task.original_frame.name),
        el("span", "frame-definition", task.original_frame.definition),
      ]),
    );
    nodes.push(el("p", "question", "Was this original frame more suitable?"));
  } else {
    nodes.push(el("p", "question", "Does the frame correctly represent the sentence?"));
  }
  nodes.push({
    tag: "div",
    className: "choices",
    children: [
      {
        tag: "button",
        className: "choice choice-yes",
        text: task.kind === "followup" ? "Yes, the original fits better" : "✓ Correct",
        onClick: () => actions.choose("yes"),
      },
      {
        tag: "button",
        className: "choice choice-no",
        text: task.kind === "followup" ? "No, it is not better" : "✗ Incorrect",
        onClick: () => actions.choose("no"),
      },
    ],
  });
  return nodes;
}

function renderProgress(position: number, total: number): VNode {
  const percent = total > 0 ? Math.round((100 * position) / total) : 0;
  return el("div", "progress", undefined, [
    {
      tag: "div",
      className: "progress-bar",
      attrs: { style: `width: ${percent}%` },
    },
    el("span", "progress-label", `${position} of ${total} judged`),
  ]);
}

export function renderApp(state: SessionState, actions: Actions): VNode {
  switch (state.phase) {
    case "idle":
    case "loading":
      return el("div", "app app-loading", undefined, [el("p", "status", "Loading…")]);
    case "error":
      return el("div", "app app-error", undefined, [
        el("p", "banner banner-error", state.message),
        {
          tag: "button",
          className: "retry",
          text: "Retry",
          onClick: () => actions.retry(),
        },
      ]);
    case "done":
      return el("div", "app app-done", undefined, [
        renderProgress(1, 1),
        el("h2", "done-title", "All items judged — thank you!"),
        el("p", "done-hint", "Submit this completion code to verify your work:"),
        el("code", "completion-code", state.code),
      ]);
    case "task": {
      const task = state.task;
      const card: VNode[] = [renderSentenceLine(task), renderFrameLine(task)];
      const elements = renderElements(task);
      if (elements) card.push(elements);
      card.push(...renderQuestion(task, actions));
      return el("div", `app app-task${state.submitting ? " submitting" : ""}`, undefined, [
        renderProgress(task.position, task.total),
        el("div", "card", undefined, card),
      ]);
    }
  }
}

export function collectText(node: VNode): string {
  const own = node.text ?? "";
  const rest = (node.children ?? []).map(collectText).join("");
  return own + rest;
}

export function findByClass(node: VNode, className: string): VNode | null {
  if ((node.className ?? "").split(" ").includes(className)) return node;
  for (const child of node.children ?? []) {
    const hit = findByClass(child, className);
    if (hit) return hit;
  }
  return null;
}
