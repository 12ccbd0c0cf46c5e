// Mirrors of the run-state API payloads. The console renders strictly from
// these; it never derives or caches pipeline state of its own.

export type Act = "setup" | "conflict" | "resolution";
export type GateName = "descriptions" | "element";
export type Verdict = "approve" | "modify" | "regenerate";

export interface SceneView {
  scene_index: number;
  act: Act;
  summary: string;
  source_span: [number, number];
  character_refs: string[];
}

export interface CharacterView {
  character_id: string;
  name: string;
  attributes: Record<string, string>;
  attire_inferred: boolean;
}

export interface PromptView {
  scene_index: number;
  bg_prompt: string;
  fg_prompts: Record<string, string>;
  global_prompt: string;
}

export interface LayoutView {
  scene_index: number;
  character_id: string;
  bbox: [number, number, number, number];
  z_order: number;
}

export interface ElementView {
  kind: "background" | "foreground";
  character_id: string | null;
  generation_seed: number;
  path: string;
}

export interface AssemblyView {
  scene_index: number;
  elements: ElementView[];
  layouts: LayoutView[];
  stitched: { path: string; notes: string[] } | null;
  rendered: { path: string; lambda_trace: number[] } | null;
}

export interface MetricReportView {
  tis: number | null;
  fid: number | null;
  ccs: number | null;
}

export interface RunView {
  run_id: string;
  phase: string;
  scene_cursor: number;
  num_scenes: number;
  open_gates: GateName[];
  error: string | null;
  story: { text: string; title: string | null };
  scenes: SceneView[];
  characters: CharacterView[];
  prompts: PromptView[];
  assemblies: AssemblyView[];
  metric_report: MetricReportView | null;
  event_count: number;
  created_at: number;
  updated_at: number;
}

export interface RunSummary {
  run_id: string;
  phase: string;
  open_gates: GateName[];
  updated_at: number;
}

export interface EventView {
  seq: number;
  kind: string;
  data: Record<string, unknown>;
  timestamp: number;
}

export interface DescriptionDecision {
  target: "scene" | "character";
  target_id: number | string;
  verdict: Verdict;
  patched_fields?: Record<string, unknown>;
}

export interface ElementDecision {
  element_key: string;
  verdict: Verdict;
}

export type ApprovalDecision = DescriptionDecision | ElementDecision;

export function elementKey(element: ElementView): string {
  return element.kind === "background" ? "bg" : `fg_${element.character_id}`;
}
