/** Wire types for the curriculum service API. */

export type EdgeKind = "required" | "optional" | "alternative";

export interface GraphSummary {
  id: string;
  version: number;
  nodes: number;
  edges: number;
  latest: boolean;
}

export interface NodeInfo {
  id: string;
  title: string;
  cluster: string | null;
  duration_minutes: number;
  page_estimate: number | null;
  content_ref: string | null;
}

export interface EdgeInfo {
  tail: string;
  head: string;
  kind: EdgeKind;
  alt_group: string | null;
}

export interface GraphDetail {
  id: string;
  version: number;
  metadata: Record<string, string>;
  nodes: NodeInfo[];
  edges: EdgeInfo[];
  alt_groups: { id: string; head: string; members: EdgeInfo[] }[];
}

export interface ClosureData {
  targets: string[];
  nodes: string[];
  induced_edges: EdgeInfo[];
  resolved_groups: Record<string, EdgeInfo>;
  skipped_optional: EdgeInfo[];
}

export interface ChoicePoint {
  group: string;
  head: string;
  members: { tail: string; closure_size: number }[];
}

export interface ScoreBreakdown {
  time: number;
  popularity: number;
  coherence: number;
}

export interface RankedOrder {
  nodes: string[];
  score: number;
  breakdown: ScoreBreakdown;
}

export interface PlanData {
  id: string;
  graph_id: string;
  graph_version: number;
  title: string;
  created_at: number;
  author_role: string;
  order: string[];
  items: { kind: "topic" | "exercise"; ref: string }[];
  stubs: string[];
  omitted: { exercise: string; reason: string }[];
}

export interface ApiFailure {
  code: string;
  message: string;
  edge?: [string, string] | null;
  choice_points?: ChoicePoint[];
  tokens?: string[];
}

export type StudentStatus = "unseen" | "in_progress" | "mastered" | "gap";
