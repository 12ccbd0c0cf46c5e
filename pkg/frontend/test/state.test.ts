import { describe, expect, it } from "vitest";

import { elementDecisions, PendingEdits } from "../src/state.js";
import type { Verdict } from "../src/types.js";

describe("PendingEdits", () => {
  it("builds one modify decision per drafted target", () => {
    const pending = new PendingEdits();
    pending.setField("scene", 2, "summary", "new summary");
    pending.setField("character", "boy", "attributes", { attire: "red coat" });
    const decisions = pending.toDecisions();
    expect(decisions).toHaveLength(2);
    expect(decisions).toContainEqual({
      target: "scene",
      target_id: 2,
      verdict: "modify",
      patched_fields: { summary: "new summary" },
    });
    expect(decisions).toContainEqual({
      target: "character",
      target_id: "boy",
      verdict: "modify",
      patched_fields: { attributes: { attire: "red coat" } },
    });
  });

  it("keeps the latest draft value per field", () => {
    const pending = new PendingEdits();
    pending.setField("scene", 0, "summary", "first");
    pending.setField("scene", 0, "summary", "second");
    expect(pending.toDecisions()).toEqual([
      {
        target: "scene",
        target_id: 0,
        verdict: "modify",
        patched_fields: { summary: "second" },
      },
    ]);
  });

  it("regeneration supersedes a field draft for the same target", () => {
    const pending = new PendingEdits();
    pending.setField("scene", 1, "summary", "ignored");
    pending.toggleRegenerate("scene", 1, true);
    expect(pending.toDecisions()).toEqual([
      { target: "scene", target_id: 1, verdict: "regenerate" },
    ]);
    pending.toggleRegenerate("scene", 1, false);
    expect(pending.toDecisions()[0].verdict).toBe("modify");
  });

  it("clear drops all drafts (used after a successful submission)", () => {
    const pending = new PendingEdits();
    pending.setField("scene", 0, "summary", "x");
    pending.toggleRegenerate("character", "boy", true);
    expect(pending.size).toBe(2);
    pending.clear();
    expect(pending.size).toBe(0);
    expect(pending.toDecisions()).toEqual([]);
  });

  it("an empty edit set approves (no decisions)", () => {
    expect(new PendingEdits().toDecisions()).toEqual([]);
  });
});

describe("elementDecisions", () => {
  it("sends only the regenerate verdicts", () => {
    const verdicts = new Map<string, Verdict>([
      ["bg", "approve"],
      ["fg_boy", "regenerate"],
      ["fg_giant", "approve"],
    ]);
    expect(elementDecisions(verdicts)).toEqual([
      { element_key: "fg_boy", verdict: "regenerate" },
    ]);
  });

  it("empty verdict map approves everything", () => {
    expect(elementDecisions(new Map())).toEqual([]);
  });
});
