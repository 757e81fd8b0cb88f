/** Response shapes of the analysis session API (schemas served at /schema). */

export interface ResResponse {
  ids: string[];
  coords: number[][];
  explained_ratio: number[];
  features: string[];
  feature_kinds: Record<string, "categorical" | "numeric">;
  training: { ids: string[]; coords: number[][] } | null;
}

export interface ClusterInfo {
  k: number;
  seed: number;
  assignments: number[];
  centroids: number[][];
  objective: number;
  per_sample_silhouette: number[];
}

export interface ClustersResponse {
  clusters: ClusterInfo;
  diagnostics: unknown;
  verdict: { mean_silhouette: number; threshold: number; suitable: boolean };
  flagged: number[];
  profiles: ClusterProfileSummary[];
}

export interface ClusterProfileSummary {
  cluster_id: number;
  size: number;
  mean_score: number | null;
  min_score: number | null;
  max_score: number | null;
  flagged: boolean;
}

export type OverlayKind = "score" | "categorical" | "numeric";

export interface OverlayResponse {
  feature: string;
  kind: OverlayKind;
  ids: string[];
  values: (string | number | null)[];
}

export interface Attribution {
  feature: string;
  kind: "categorical" | "numeric";
  score: number;
  coverage: number;
  value?: string;
  interval?: [number, number];
}

export interface AttributionResponse extends ClusterProfileSummary {
  attributions: Attribution[];
}

export interface ReportResponse {
  trustworthiness: number | null;
  proximity: number | null;
  k: number;
  radius: { mean: number | null; min: number | null; max: number | null };
  density: { mean: number | null; min: number | null; max: number | null };
  silhouette: number;
  suitable: boolean;
}

export interface BoosterResponse {
  schema_version: number;
  kind: "booster";
  target_cluster: number;
  predicates: {
    feature: string;
    kind: "categorical" | "numeric";
    value?: string;
    interval?: [number, number];
  }[];
  matched_ids: string[];
}

export interface FieldError {
  loc: (string | number)[];
  msg: string;
  type: string;
}
