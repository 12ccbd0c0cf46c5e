// End-to-end gate round-trip against a live `visagent serve` process with
// mock backends: edit a scene summary and approve, reject one element and
// observe exactly one regeneration, and reproduce the gate screen from the
// API alone (the reload-mid-gate contract).

import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleApi } from "../src/api.js";
import { PendingEdits } from "../src/state.js";
import type { ApprovalDecision, RunView, Verdict } from "../src/types.js";
import { renderApp } from "../src/views.js";

const PORT = 8900 + Math.floor(Math.random() * 90);
const BASE = `http://127.0.0.1:${PORT}`;
const STORY_PATH = resolve(__dirname, "../../fixtures/stories/jack_and_the_beanstalk.txt");

let server: ChildProcess;
const api = new ConsoleApi(BASE);

async function waitFor<T>(
  probe: () => Promise<T | null>,
  what: string,
  timeoutMs = 60_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const result = await probe().catch(() => null);
    if (result !== null) return result;
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`timed out waiting for ${what}`);
}

function waitForPhase(runId: string, phases: string[], timeoutMs = 60_000): Promise<RunView> {
  return waitFor(async () => {
    const view = await api.getRun(runId);
    if (view.phase === "failed") throw new Error(`run failed: ${view.error}`);
    return phases.includes(view.phase) ? view : null;
  }, `phase in [${phases}]`, timeoutMs);
}

interface Console {
  root: HTMLElement;
  pending: PendingEdits;
  verdicts: Map<string, Verdict>;
  inflight: Promise<RunView> | null;
  render(view: RunView): void;
}

// Wires the console exactly like the app bootstrap does; a fresh instance
// acts as a freshly loaded page.
function openConsole(runId: string): Console {
  const console_: Console = {
    root: document.createElement("div"),
    pending: new PendingEdits(),
    verdicts: new Map(),
    inflight: null,
    render(view: RunView) {
      renderApp(this.root, view, api, this.pending, this.verdicts, {
        submitDescriptions: async (decisions: ApprovalDecision[]) => {
          console_.inflight = api.submitApproval(runId, "descriptions", decisions);
          await console_.inflight;
        },
        submitElements: async (decisions: ApprovalDecision[]) => {
          console_.inflight = api.submitApproval(runId, "element", decisions);
          await console_.inflight;
        },
      });
    },
  };
  document.body.appendChild(console_.root);
  return console_;
}

beforeAll(async () => {
  const store = mkdtempSync(join(tmpdir(), "visagent-e2e-"));
  server = spawn(
    "python3",
    ["-m", "visagent.cli", "serve", "--port", String(PORT), "--store", store],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stderr?.on("data", () => {});
  await waitFor(async () => {
    const response = await fetch(`${BASE}/runs`);
    return response.ok ? true : null;
  }, "server startup");
});

afterAll(() => {
  server?.kill();
});

describe("gate round-trip through the console", () => {
  it("edits a summary, approves, rejects one element, and reloads mid-gate", async () => {
    const createResponse = await fetch(`${BASE}/runs`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        story_text: readFileSync(STORY_PATH, "utf-8"),
        title: "Console e2e",
        config: { auto_approve: false },
      }),
    });
    expect(createResponse.ok).toBe(true);
    const runId = ((await createResponse.json()) as RunView).run_id;

    // descriptions gate: edit one scene summary through the form, approve
    let view = await waitForPhase(runId, ["awaiting_description_feedback"]);
    const page = openConsole(runId);
    page.render(view);
    const textarea = page.root.querySelector<HTMLTextAreaElement>(
      '.scene-card[data-scene-index="0"] textarea',
    )!;
    expect(textarea).not.toBeNull();
    textarea.value = "Jack strikes the bargain at the town market.";
    textarea.dispatchEvent(new Event("input"));
    page.root.querySelector<HTMLButtonElement>(".submit-gate")!.click();
    await page.inflight;

    // the pipeline resumes and the edit landed
    view = await waitForPhase(runId, ["awaiting_element_approval"]);
    expect(view.scenes[0].summary).toBe("Jack strikes the bargain at the town market.");
    expect(page.pending.size).toBe(0); // drafts cleared on success

    // reload mid-gate: a fresh console reproduces the gate screen from the
    // API alone
    const reloaded = openConsole(runId);
    reloaded.render(await api.getRun(runId));
    const gateCards = [
      ...reloaded.root.querySelectorAll<HTMLElement>(".element-card"),
    ].map((card) => card.dataset.elementKey);
    expect(gateCards.length).toBeGreaterThan(1);
    expect(gateCards).toContain("bg");

    // reject exactly one foreground element
    const rejectKey = gateCards.find((key) => key?.startsWith("fg_"))!;
    reloaded.root
      .querySelector<HTMLButtonElement>(`[data-element-key="${rejectKey}"] .verdict-toggle`)!
      .click();
    reloaded.root.querySelector<HTMLButtonElement>(".submit-gate")!.click();
    await reloaded.inflight;

    view = await waitForPhase(runId, ["awaiting_element_approval"]);
    const events = await api.getEvents(runId, -1);
    const regenerations = events.filter((e) => e.kind === "elements_regenerated");
    expect(regenerations).toHaveLength(1);
    expect(regenerations[0].data.keys).toEqual([rejectKey]);

    // approve the remaining element gates until the run completes
    for (let round = 0; round < 12; round += 1) {
      view = await waitForPhase(runId, ["awaiting_element_approval", "done"]);
      if (view.phase === "done") break;
      const gate = openConsole(runId);
      gate.render(view);
      gate.root.querySelector<HTMLButtonElement>(".submit-gate")!.click();
      await gate.inflight;
    }
    view = await waitForPhase(runId, ["done"]);
    expect(view.assemblies.filter((a) => a.rendered).length).toBe(view.num_scenes);

    // the finished run renders as a gallery
    const gallery = openConsole(runId);
    gallery.render(view);
    expect(gallery.root.querySelectorAll(".gallery-card")).toHaveLength(view.num_scenes);
  });
});
