// Bootstrap: run list at #/, run console at #/run/<id>, events via polling.

import { ConsoleApi } from "./api.js";
import { EventPoller } from "./poll.js";
import { PendingEdits } from "./state.js";
import type { ApprovalDecision, RunView, Verdict } from "./types.js";
import { renderApp } from "./views.js";

const api = new ConsoleApi("");
const root = document.getElementById("app") as HTMLElement;

let poller: EventPoller | null = null;
const pending = new PendingEdits();
const verdicts = new Map<string, Verdict>();

async function showRunList(): Promise<void> {
  poller?.stop();
  poller = null;
  const runs = await api.listRuns();
  root.textContent = "";
  const heading = document.createElement("h1");
  heading.textContent = "Runs";
  root.appendChild(heading);
  const list = document.createElement("ul");
  list.className = "run-list";
  for (const run of runs) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.href = `#/run/${run.run_id}`;
    link.textContent = `${run.run_id} — ${run.phase}` +
      (run.open_gates.length ? ` (waiting: ${run.open_gates.join(", ")})` : "");
    item.appendChild(link);
    list.appendChild(item);
  }
  if (!runs.length) {
    const hint = document.createElement("p");
    hint.textContent = "No runs yet. Start one with the CLI, then reload.";
    root.appendChild(hint);
  }
  root.appendChild(list);
}

async function refresh(runId: string): Promise<RunView> {
  const view = await api.getRun(runId);
  renderApp(root, view, api, pending, verdicts, {
    submitDescriptions: (decisions: ApprovalDecision[]) =>
      api.submitApproval(runId, "descriptions", decisions).then(() => void refresh(runId)),
    submitElements: (decisions: ApprovalDecision[]) =>
      api.submitApproval(runId, "element", decisions).then(() => void refresh(runId)),
  });
  return view;
}

async function showRun(runId: string): Promise<void> {
  poller?.stop();
  pending.clear();
  verdicts.clear();
  await refresh(runId);
  poller = new EventPoller(
    (after) => api.getEvents(runId, after),
    () => void refresh(runId),
    1000,
  );
  poller.start();
}

function route(): void {
  const match = window.location.hash.match(/^#\/run\/([A-Za-z0-9_-]+)/);
  if (match) void showRun(match[1]);
  else void showRunList();
}

window.addEventListener("hashchange", route);
route();
