/**
 * Service payload shapes, mirrored field-for-field from the checker's
 * JSON responses. The UI treats every number in these structures as
 * authoritative — nothing displayed is ever re-derived client-side.
 */

export interface UploadResponse {
  session_id: string;
  model: string;
  files: string[];
  fingerprint: string;
  storey_count: number;
}

export interface StoreySummary {
  name: string;
  elevation_m: number;
  element_count: number;
  multi_span_count: number;
  repair_notes: string[];
}

export interface StoreysResponse {
  model: string;
  ground_storey: string;
  storeys: StoreySummary[];
  unassigned: string[];
}

/** One [x, y] vertex in model-local plan coordinates (metres). */
export type PlanPoint = [number, number];

/** Closed footprint ring; the last vertex is not repeated. */
export type Ring = PlanPoint[];

export interface FootprintParamsEcho {
  cut_offset_m: number;
  sample_spacing_m: number;
  dbscan_eps_m: number;
  dbscan_min_pts: number;
  hull_k: number;
}

export interface FootprintStorey {
  name: string;
  elevation_m: number;
  overlap_pct: number;
  area_m2: number;
  polygons: Ring[];
}

export interface FootprintsResponse {
  model: string;
  params: FootprintParamsEcho;
  reference_storey: string;
  storeys: FootprintStorey[];
}

/** [storey name, elevation m, polygon count, overlap %] */
export type OverlapRow = [string, number, number, number];

export interface OverlapsResponse {
  model: string;
  params: FootprintParamsEcho;
  reference_storey: string;
  rows: OverlapRow[];
}

export type Verdict = "pass" | "fail" | "needs-review";

export interface OverhangMeasure {
  max_overhang_m: number;
  limit_m: number;
  worst_storey: string;
  per_storey_m: Record<string, number>;
}

export interface OverhangResponse {
  rule: string;
  verdict: Verdict;
  measured: Record<string, OverhangMeasure>;
  evidence: string[];
  notes: string[];
}

export interface JobAccepted {
  status: "accepted";
  job: string;
  poll: string;
}

export interface ApiFailure {
  code: string;
  message: string;
  detail: unknown;
}

export type LineSide = "left" | "right";

export interface OverhangLineBody {
  label: string;
  p1: PlanPoint;
  p2: PlanPoint;
  side: LineSide;
  limit: number;
}

export interface OverhangRequestBody {
  lines: OverhangLineBody[];
  target_storeys?: string[];
}

export interface FootprintBodyParams {
  cut_offset: number;
  sample_spacing: number;
  dbscan_eps: number;
  dbscan_min_pts: number;
  hull_k: number;
}

export interface ComputeRequestBody {
  footprint: FootprintBodyParams;
  reference_storey?: string;
}
