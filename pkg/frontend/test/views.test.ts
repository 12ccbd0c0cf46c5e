import { describe, expect, it } from "vitest";

import { ConsoleApi } from "../src/api.js";
import { PendingEdits } from "../src/state.js";
import type { ApprovalDecision, Verdict } from "../src/types.js";
import { renderApp } from "../src/views.js";
import { assemblyView, runView } from "./helpers.js";

function mount() {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

function noopHandlers() {
  return {
    submitDescriptions: async (_: ApprovalDecision[]) => {},
    submitElements: async (_: ApprovalDecision[]) => {},
  };
}

describe("descriptions gate", () => {
  it("shows five editable scene cards and three character forms", () => {
    const root = mount();
    renderApp(root, runView(), new ConsoleApi(), new PendingEdits(), new Map(), noopHandlers());
    expect(root.querySelectorAll(".scene-card")).toHaveLength(5);
    expect(root.querySelectorAll(".scene-card textarea")).toHaveLength(5);
    expect(root.querySelectorAll(".character-card")).toHaveLength(3);
    // every schema attribute maps to exactly one input on each card
    const firstCard = root.querySelector(".character-card")!;
    const fields = [...firstCard.querySelectorAll<HTMLInputElement>(".attribute-input")].map(
      (input) => input.dataset.field,
    );
    expect(fields).toEqual(["appearance", "attire", "gender"]);
  });

  it("typing into a summary drafts a modify decision for that scene only", () => {
    const root = mount();
    const pending = new PendingEdits();
    renderApp(root, runView(), new ConsoleApi(), pending, new Map(), noopHandlers());
    const textarea = root.querySelector<HTMLTextAreaElement>(
      '.scene-card[data-scene-index="2"] textarea',
    )!;
    textarea.value = "An edited summary.";
    textarea.dispatchEvent(new Event("input"));
    expect(pending.toDecisions()).toEqual([
      {
        target: "scene",
        target_id: 2,
        verdict: "modify",
        patched_fields: { summary: "An edited summary." },
      },
    ]);
  });

  it("submits exactly once while a request is in flight", async () => {
    const root = mount();
    let calls = 0;
    let release: () => void = () => {};
    const handlers = {
      submitDescriptions: (_: ApprovalDecision[]) => {
        calls += 1;
        return new Promise<void>((resolve) => {
          release = resolve;
        });
      },
      submitElements: async (_: ApprovalDecision[]) => {},
    };
    renderApp(root, runView(), new ConsoleApi(), new PendingEdits(), new Map(), handlers);
    const button = root.querySelector<HTMLButtonElement>(".submit-gate")!;
    button.click();
    button.click();
    button.click();
    expect(calls).toBe(1);
    expect(button.disabled).toBe(true);
    release();
  });

  it("preserves drafts when submission fails", async () => {
    const root = mount();
    const pending = new PendingEdits();
    const handlers = {
      submitDescriptions: async (_: ApprovalDecision[]) => {
        throw new Error("boom");
      },
      submitElements: async (_: ApprovalDecision[]) => {},
    };
    renderApp(root, runView(), new ConsoleApi(), pending, new Map(), handlers);
    const textarea = root.querySelector<HTMLTextAreaElement>(".scene-card textarea")!;
    textarea.value = "kept";
    textarea.dispatchEvent(new Event("input"));
    const button = root.querySelector<HTMLButtonElement>(".submit-gate")!;
    button.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(pending.size).toBe(1); // draft survives the failure
    expect(button.disabled).toBe(false); // retry allowed
    expect(root.querySelector(".error-note")?.textContent).toContain("boom");
  });
});

describe("element gate", () => {
  function elementGateView() {
    return runView({
      phase: "awaiting_element_approval",
      open_gates: ["element"],
      scene_cursor: 0,
      assemblies: [assemblyView(0)],
    });
  }

  it("shows a thumbnail card per element with verdict toggles", () => {
    const root = mount();
    renderApp(root, elementGateView(), new ConsoleApi(), new PendingEdits(), new Map(), noopHandlers());
    const cards = [...root.querySelectorAll<HTMLElement>(".element-card")];
    expect(cards.map((c) => c.dataset.elementKey)).toEqual(["bg", "fg_boy"]);
    expect(root.querySelectorAll(".element-thumb")).toHaveLength(2);
  });

  it("a regenerate click submits that element only", async () => {
    const root = mount();
    const verdicts = new Map<string, Verdict>();
    const submitted: ApprovalDecision[][] = [];
    const handlers = {
      submitDescriptions: async (_: ApprovalDecision[]) => {},
      submitElements: async (decisions: ApprovalDecision[]) => {
        submitted.push(decisions);
      },
    };
    renderApp(root, elementGateView(), new ConsoleApi(), new PendingEdits(), verdicts, handlers);
    root
      .querySelector<HTMLButtonElement>('[data-element-key="fg_boy"] .verdict-toggle')!
      .click();
    root.querySelector<HTMLButtonElement>(".submit-gate")!.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(submitted).toEqual([[{ element_key: "fg_boy", verdict: "regenerate" }]]);
  });
});

describe("non-gate phases", () => {
  it("renders a read-only progress view when no gate is open", () => {
    const root = mount();
    renderApp(
      root,
      runView({ phase: "rendering", open_gates: [] }),
      new ConsoleApi(),
      new PendingEdits(),
      new Map(),
      noopHandlers(),
    );
    expect(root.querySelector(".progress-view")).not.toBeNull();
    expect(root.querySelector("textarea")).toBeNull();
    expect(root.querySelector(".submit-gate")).toBeNull();
  });

  it("renders the gallery with layout overlays when done", () => {
    const root = mount();
    renderApp(
      root,
      runView({
        phase: "done",
        open_gates: [],
        assemblies: [0, 1, 2, 3, 4].map(assemblyView),
        metric_report: { tis: 12.3, fid: 1.5, ccs: 40.0 },
      }),
      new ConsoleApi(),
      new PendingEdits(),
      new Map(),
      noopHandlers(),
    );
    expect(root.querySelectorAll(".gallery-card")).toHaveLength(5);
    expect(root.querySelectorAll(".overlay-box").length).toBeGreaterThan(0);
    expect(root.querySelector(".metrics")?.textContent).toContain("tis");
  });
});
