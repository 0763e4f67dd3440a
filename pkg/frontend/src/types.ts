// Mirrors of the service API payloads. Rendered state is always derived
// from the last successful response; the console never invents statuses.

export interface AreaSummary {
  id: string;
  gap: number | null;
  status: string | null;
  objective: number | null;
  conflict_count: number;
  solved_at: number | null;
  now: number;
}

export type RecommendationStatus =
  | "Pending"
  | "AcceptedByDispatcher"
  | "ForwardedToSetter"
  | "RealizedBySetter"
  | "RejectedByDispatcher"
  | "RejectedBySetter"
  | "Expired";

export interface Recommendation {
  id: string;
  kind: "OrderChange" | "TrackChange" | "LineChange";
  train_ids: string[];
  location: string;
  detail: string;
  deadline: number;
  created_at: number;
  area_id: string;
  status: RecommendationStatus;
  feedback: "Up" | "Down" | null;
}

export interface RecommendationList {
  now: number;
  recommendations: Recommendation[];
}

export interface TrainLine {
  train_id: string;
  prognosis: [number, number][];
  planned: [number, number][];
  delay: number;
}

export interface TimeDistance {
  area_id: string;
  now: number;
  trains: TrainLine[];
  boundaries: { node: string; distance: number }[];
}

export interface Metrics {
  runs: number;
  runs_within_gap: number;
  pct_within_gap: number;
  mean_objective: number;
  mesh_rounds_to_fixed_point: number | null;
}
