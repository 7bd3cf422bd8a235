// Browser entry point: binds the session controller to the DOM.

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { renderApp, VNode } from "./view.js";

function toElement(node: VNode): HTMLElement {
  const element = document.createElement(node.tag);
  if (node.className) element.className = node.className;
  if (node.text !== undefined) element.textContent = node.text;
  for (const [key, value] of Object.entries(node.attrs ?? {})) {
    element.setAttribute(key, value);
  }
  if (node.onClick) element.addEventListener("click", node.onClick);
  for (const child of node.children ?? []) {
    element.appendChild(toElement(child));
  }
  return element;
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;

  const params = new URLSearchParams(window.location.search);
  const campaign = params.get("campaign") ?? "";
  const evaluator = params.get("evaluator") ?? "";

  const controller = new SessionController(new ApiClient(""));
  const actions = {
    choose: (answer: "yes" | "no") => void controller.choose(answer),
    retry: () => void controller.retry(),
  };
  controller.onChange((state) => {
    root.replaceChildren(toElement(renderApp(state, actions)));
  });

  if (!campaign || !evaluator) {
    root.replaceChildren(
      toElement({
        tag: "div",
        className: "app app-error",
        children: [
          {
            tag: "p",
            className: "banner",
            text: "Open this page with ?campaign=<id>&evaluator=<your id> from your study invitation.",
          },
        ],
      }),
    );
    return;
  }
  void controller.start(campaign, evaluator);
}

boot();
