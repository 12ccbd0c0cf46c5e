// Gate and progress screens, rendered strictly from the API's run view.

import type { ConsoleApi } from "./api.js";
import { elementDecisions, PendingEdits } from "./state.js";
import { renderLayoutOverlay } from "./overlay.js";
import type {
  ApprovalDecision,
  AssemblyView,
  RunView,
  Verdict,
} from "./types.js";
import { elementKey } from "./types.js";

export interface GateHandlers {
  submitDescriptions(decisions: ApprovalDecision[]): Promise<void>;
  submitElements(decisions: ApprovalDecision[]): Promise<void>;
}

const OVERLAY_SIZE = { width: 256, height: 256 };

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

// Submission is disabled while a request is in flight, so repeated clicks
// produce exactly one approval event.
function guardedSubmit(button: HTMLButtonElement, submit: () => Promise<void>): void {
  button.addEventListener("click", () => {
    if (button.disabled) return;
    button.disabled = true;
    void submit()
      .catch((error: unknown) => {
        const note = button.parentElement?.querySelector(".error-note");
        if (note) note.textContent = String(error);
        button.disabled = false; // drafts are preserved; allow retry
      });
  });
}

function renderHeader(root: HTMLElement, view: RunView): void {
  const header = el("header", "run-header");
  header.appendChild(el("h1", "", view.story.title ?? view.run_id));
  const status = el("p", "run-status");
  status.dataset.phase = view.phase;
  status.textContent = `run ${view.run_id} — phase ${view.phase}` +
    (view.open_gates.length ? ` — waiting on ${view.open_gates.join(", ")}` : "");
  header.appendChild(status);
  if (view.error) header.appendChild(el("p", "error-note", view.error));
  root.appendChild(header);
}

export function renderDescriptionsGate(
  root: HTMLElement,
  view: RunView,
  pending: PendingEdits,
  handlers: GateHandlers,
): void {
  const section = el("section", "gate gate-descriptions");
  section.appendChild(el("h2", "", "Review scenes and characters"));

  const sceneList = el("div", "cards scene-cards");
  for (const scene of view.scenes) {
    const card = el("article", "card scene-card");
    card.dataset.sceneIndex = String(scene.scene_index);
    card.appendChild(el("h3", "", `Scene ${scene.scene_index + 1} — ${scene.act}`));

    const summary = el("textarea", "scene-summary") as HTMLTextAreaElement;
    summary.value = String(
      pending.fieldValue("scene", scene.scene_index, "summary") ?? scene.summary,
    );
    summary.addEventListener("input", () => {
      pending.setField("scene", scene.scene_index, "summary", summary.value);
    });
    card.appendChild(summary);

    const regen = el("label", "regen-toggle");
    const checkbox = el("input") as HTMLInputElement;
    checkbox.type = "checkbox";
    checkbox.checked = pending.isRegenerate("scene", scene.scene_index);
    checkbox.addEventListener("change", () => {
      pending.toggleRegenerate("scene", scene.scene_index, checkbox.checked);
    });
    regen.appendChild(checkbox);
    regen.appendChild(document.createTextNode(" regenerate"));
    card.appendChild(regen);
    sceneList.appendChild(card);
  }
  section.appendChild(sceneList);

  const characterList = el("div", "cards character-cards");
  for (const character of view.characters) {
    const card = el("article", "card character-card");
    card.dataset.characterId = character.character_id;
    card.appendChild(el("h3", "", character.name));
    for (const [key, value] of Object.entries(character.attributes)) {
      const row = el("label", "attribute-row", `${key}: `);
      const input = el("input", "attribute-input") as HTMLInputElement;
      input.dataset.field = key;
      const drafted = pending.fieldValue("character", character.character_id, "attributes");
      input.value =
        drafted && typeof drafted === "object"
          ? String((drafted as Record<string, string>)[key] ?? value)
          : value;
      input.addEventListener("input", () => {
        const attributes: Record<string, string> = { ...character.attributes };
        card.querySelectorAll<HTMLInputElement>(".attribute-input").forEach((field) => {
          attributes[field.dataset.field!] = field.value;
        });
        pending.setField("character", character.character_id, "attributes", attributes);
      });
      row.appendChild(input);
      card.appendChild(row);
    }
    if (character.attire_inferred) {
      card.appendChild(el("p", "hint", "attire inferred from context"));
    }
    characterList.appendChild(card);
  }
  section.appendChild(characterList);

  const controls = el("div", "gate-controls");
  const submit = el("button", "submit-gate", "Approve and continue") as HTMLButtonElement;
  guardedSubmit(submit, async () => {
    await handlers.submitDescriptions(pending.toDecisions());
    pending.clear();
  });
  controls.appendChild(submit);
  controls.appendChild(el("span", "error-note"));
  section.appendChild(controls);
  root.appendChild(section);
}

export function renderElementGate(
  root: HTMLElement,
  view: RunView,
  api: ConsoleApi,
  verdicts: Map<string, Verdict>,
  handlers: GateHandlers,
): void {
  const assembly = view.assemblies.find((a) => a.scene_index === view.scene_cursor);
  const section = el("section", "gate gate-element");
  section.appendChild(
    el("h2", "", `Review elements for scene ${view.scene_cursor + 1}`),
  );

  const grid = el("div", "cards element-cards");
  for (const element of assembly?.elements ?? []) {
    const key = elementKey(element);
    const card = el("article", "card element-card");
    card.dataset.elementKey = key;

    const thumb = el("img", "element-thumb") as HTMLImageElement;
    thumb.src = api.artifactUrl(view.run_id, element.path);
    thumb.alt = key;
    thumb.width = 128;
    thumb.height = 128;
    card.appendChild(thumb);
    card.appendChild(el("h3", "", key));

    const toggle = el("button", "verdict-toggle") as HTMLButtonElement;
    const paint = () => {
      const verdict = verdicts.get(key) ?? "approve";
      toggle.textContent = verdict === "approve" ? "approve" : "regenerate";
      toggle.dataset.verdict = verdict;
    };
    toggle.addEventListener("click", () => {
      const current = verdicts.get(key) ?? "approve";
      verdicts.set(key, current === "approve" ? "regenerate" : "approve");
      paint();
    });
    paint();
    card.appendChild(toggle);
    grid.appendChild(card);
  }
  section.appendChild(grid);

  const controls = el("div", "gate-controls");
  const submit = el("button", "submit-gate", "Submit verdicts") as HTMLButtonElement;
  guardedSubmit(submit, async () => {
    await handlers.submitElements(elementDecisions(verdicts));
    verdicts.clear();
  });
  controls.appendChild(submit);
  controls.appendChild(el("span", "error-note"));
  section.appendChild(controls);
  root.appendChild(section);
}

function renderAssembly(
  root: HTMLElement,
  view: RunView,
  assembly: AssemblyView,
  api: ConsoleApi,
): void {
  const card = el("article", "card gallery-card");
  card.dataset.sceneIndex = String(assembly.scene_index);
  card.appendChild(el("h3", "", `Scene ${assembly.scene_index + 1}`));

  const background = assembly.elements.find((e) => e.kind === "background");
  if (background && assembly.layouts.length) {
    const overlay = el("div");
    renderLayoutOverlay(
      overlay,
      api.artifactUrl(view.run_id, background.path),
      assembly.layouts,
      OVERLAY_SIZE,
    );
    card.appendChild(overlay);
  }
  if (assembly.rendered) {
    const final = el("img", "final-image") as HTMLImageElement;
    final.src = api.artifactUrl(view.run_id, assembly.rendered.path);
    final.alt = `scene ${assembly.scene_index} final`;
    final.width = OVERLAY_SIZE.width;
    final.height = OVERLAY_SIZE.height;
    card.appendChild(final);
  }
  root.appendChild(card);
}

export function renderProgress(root: HTMLElement, view: RunView): void {
  const section = el("section", "progress-view");
  section.appendChild(el("h2", "", "Pipeline running"));
  const done = view.assemblies.filter((a) => a.rendered).length;
  section.appendChild(
    el("p", "", `${done} of ${view.num_scenes} scenes rendered; phase ${view.phase}`),
  );
  root.appendChild(section);
}

export function renderGallery(root: HTMLElement, view: RunView, api: ConsoleApi): void {
  const section = el("section", "gallery-view");
  section.appendChild(el("h2", "", view.phase === "failed" ? "Run failed" : "Final scenes"));
  if (view.metric_report) {
    const line = Object.entries(view.metric_report)
      .filter(([, value]) => typeof value === "number")
      .map(([name, value]) => `${name} ${Number(value).toFixed(2)}`)
      .join("  ·  ");
    if (line) section.appendChild(el("p", "metrics", line));
  }
  const grid = el("div", "cards gallery-cards");
  for (const assembly of view.assemblies) {
    renderAssembly(grid, view, assembly, api);
  }
  section.appendChild(grid);
  root.appendChild(section);
}

export function renderApp(
  root: HTMLElement,
  view: RunView,
  api: ConsoleApi,
  pending: PendingEdits,
  verdicts: Map<string, Verdict>,
  handlers: GateHandlers,
): void {
  root.textContent = "";
  renderHeader(root, view);
  if (view.open_gates.includes("descriptions")) {
    renderDescriptionsGate(root, view, pending, handlers);
  } else if (view.open_gates.includes("element")) {
    renderElementGate(root, view, api, verdicts, handlers);
  } else if (view.phase === "done" || view.phase === "failed") {
    renderGallery(root, view, api);
  } else {
    renderProgress(root, view);
  }
}
