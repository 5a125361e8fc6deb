export interface EmbeddingData {
  coords: Float32Array; // interleaved x, y pairs, length 2n
  ids: string[];
}

export interface PointRecord {
  id: string;
  x: number;
  y: number;
  view_label: string | null;
  patient_id: string | null;
  is_seed: boolean;
  image_path: string | null;
}

export interface ClusterSummary {
  id: number;
  size: number;
  centroid: [number, number];
  kind: 'main' | 'satellite' | 'noise';
  dominant_view: [string | null, number];
  dominant_patient: [string | null, number];
  separation: number;
  member_ids: string[];
}

export interface ClusterReport {
  main_fraction: number;
  labels: number[];
  ids: string[];
  clusters: ClusterSummary[];
}

export interface Flag {
  flag_id: number;
  cluster_id: number;
  flag_type: string;
  note: string;
}

export interface RunRecord {
  run_id: string;
  created_at: string;
  config: Record<string, unknown>;
  stage_status: Record<string, string>;
  artifacts: Record<string, string>;
}

export interface OutlierRow {
  id: string;
  cluster_id: number;
  flag_type: string;
  image_path: string | null;
}

export type ColorMode =
  | 'view_label'
  | 'cluster'
  | 'patient'
  | 'seed_flag'
  | 'probe_vote';

export interface Camera {
  centerX: number;
  centerY: number;
  scale: number; // data units per pixel divisor; larger means zoomed in
}

export interface SeedProbeRequest {
  seed_features: string;
  seed_manifest?: string;
  seed_label?: string;
  k?: number;
  min_dist?: number;
  n_epochs?: number;
  rng_seed?: number;
  k_vote?: number;
  vote_threshold?: number;
}

export interface FlaggedPoint {
  id: string;
  seed_vote_fraction: number;
  cluster_id: number;
}

export interface SeedProbeResult {
  config: { k_vote: number; vote_threshold: number; seed_label: string };
  flagged: FlaggedPoint[];
}
