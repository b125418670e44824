// Wire shapes, mirroring the session service exactly. The client never
// derives statistics from these; it displays them.

export interface DrawItem {
  unit_id: string;
  g: number;
  already_labeled: boolean;
  f: number | null;
  url: string | null;
}

export interface RegionEstimate {
  value: number;
  n_region: number;
  ci_low: number | null;
  ci_high: number | null;
  empty: boolean;
  stop_ok: boolean | null;
}

export interface EffortInfo {
  distinct_labeled: number;
  labeled_draws: number;
  total_draws: number;
  effort_pct: number;
}

export interface EstimatesPayload {
  regions: Record<string, RegionEstimate>;
  f_hat_omega: number | null;
  effort: EffortInfo;
}

export interface DatasetInfo {
  name: string;
  units: number;
  total_g: number;
  regions: string[];
  has_oracle: boolean;
  has_covariate: boolean;
}

export interface SessionRecord {
  id: string;
  dataset: string;
  regions: Record<string, string[]>;
  draws: string[];
  labels: Record<string, number>;
  stop_targets: Record<string, number>;
  estimates: EstimatesPayload;
}

export interface SessionConfigBody {
  method?: string;
  seed?: number;
  alpha?: number;
  dataset?: string;
  stop_targets?: Record<string, number>;
}
