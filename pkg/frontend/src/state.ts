// Local uncommitted gate decisions. Drafts are keyed by target, cleared on
// successful submission, and never submitted without an explicit action.

import type { DescriptionDecision, ElementDecision, Verdict } from "./types.js";

export type EditTarget = "scene" | "character";

function draftKey(target: EditTarget, targetId: number | string): string {
  return `${target}:${targetId}`;
}

export class PendingEdits {
  private drafts = new Map<string, Map<string, unknown>>();
  private regenerations = new Set<string>();

  setField(target: EditTarget, targetId: number | string, field: string, value: unknown): void {
    const key = draftKey(target, targetId);
    if (!this.drafts.has(key)) this.drafts.set(key, new Map());
    this.drafts.get(key)!.set(field, value);
  }

  fieldValue(target: EditTarget, targetId: number | string, field: string): unknown {
    return this.drafts.get(draftKey(target, targetId))?.get(field);
  }

  toggleRegenerate(target: EditTarget, targetId: number | string, on: boolean): void {
    const key = draftKey(target, targetId);
    if (on) this.regenerations.add(key);
    else this.regenerations.delete(key);
  }

  isRegenerate(target: EditTarget, targetId: number | string): boolean {
    return this.regenerations.has(draftKey(target, targetId));
  }

  get size(): number {
    return this.drafts.size + this.regenerations.size;
  }

  clear(): void {
    this.drafts.clear();
    this.regenerations.clear();
  }

  // One decision per touched target: regeneration wins over a field draft
  // for the same target (the regenerated output supersedes any edit).
  toDecisions(): DescriptionDecision[] {
    const decisions: DescriptionDecision[] = [];
    for (const key of this.regenerations) {
      const [target, ...rest] = key.split(":");
      decisions.push({
        target: target as EditTarget,
        target_id: target === "scene" ? Number(rest.join(":")) : rest.join(":"),
        verdict: "regenerate",
      });
    }
    for (const [key, fields] of this.drafts) {
      if (this.regenerations.has(key)) continue;
      const [target, ...rest] = key.split(":");
      decisions.push({
        target: target as EditTarget,
        target_id: target === "scene" ? Number(rest.join(":")) : rest.join(":"),
        verdict: "modify",
        patched_fields: Object.fromEntries(fields),
      });
    }
    return decisions;
  }
}

// The element gate sends only the rejections; untouched elements are
// approved implicitly by an empty payload.
export function elementDecisions(verdicts: Map<string, Verdict>): ElementDecision[] {
  const decisions: ElementDecision[] = [];
  for (const [key, verdict] of verdicts) {
    if (verdict === "regenerate") decisions.push({ element_key: key, verdict });
  }
  return decisions;
}
