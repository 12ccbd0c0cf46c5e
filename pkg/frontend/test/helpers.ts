import type { AssemblyView, CharacterView, RunView, SceneView } from "../src/types.js";

export function sceneView(index: number, summary?: string): SceneView {
  return {
    scene_index: index,
    act: index < 2 ? "setup" : index < 4 ? "conflict" : "resolution",
    summary: summary ?? `Scene ${index} summary`,
    source_span: [0, 10],
    character_refs: ["boy"],
  };
}

export function characterView(id: string): CharacterView {
  return {
    character_id: id,
    name: id,
    attributes: { appearance: `a ${id}`, attire: "plain clothes", gender: "unspecified" },
    attire_inferred: true,
  };
}

export function assemblyView(index: number): AssemblyView {
  return {
    scene_index: index,
    elements: [
      { kind: "background", character_id: null, generation_seed: 1, path: `scene_${index}/bg.png` },
      { kind: "foreground", character_id: "boy", generation_seed: 2, path: `scene_${index}/fg_boy.png` },
    ],
    layouts: [
      { scene_index: index, character_id: "boy", bbox: [0.3, 0.4, 0.6, 0.95], z_order: 0 },
    ],
    stitched: { path: `scene_${index}/stitched.png`, notes: [] },
    rendered: { path: `scene_${index}/final.png`, lambda_trace: [0.1, 0.3, 0.5] },
  };
}

export function runView(overrides: Partial<RunView> = {}): RunView {
  return {
    run_id: "testrun",
    phase: "awaiting_description_feedback",
    scene_cursor: 0,
    num_scenes: 5,
    open_gates: ["descriptions"],
    error: null,
    story: { text: "a story", title: "A Story" },
    scenes: [0, 1, 2, 3, 4].map((i) => sceneView(i)),
    characters: ["boy", "merchant", "giant"].map(characterView),
    prompts: [],
    assemblies: [],
    metric_report: null,
    event_count: 3,
    created_at: 0,
    updated_at: 0,
    ...overrides,
  };
}
