// Wire types for the synthline HTTP API.

export interface ActivationRule {
  feature: string;
  equals: string;
}

export interface FeatureDef {
  name: string;
  kind: 'single-select' | 'multi-select' | 'integer' | 'real' | 'text' | 'record-list';
  domain?: string[] | { min?: number; max?: number; exclusive_min?: boolean; exclusive_max?: boolean } | null;
  mandatory?: boolean;
  open?: boolean;
  default?: unknown;
  active_when?: ActivationRule | null;
}

export interface FeatureGroupDef {
  name: string;
  features: FeatureDef[];
}

export interface FeatureModelDoc {
  groups: FeatureGroupDef[];
}

export interface Violation {
  code: string;
  feature: string;
  message: string;
}

export interface ValidateResponse {
  valid: boolean;
  violations: Violation[];
  atomic_count: number | null;
}

export type SelectionDocument = Record<string, unknown>;

export interface RunCreated {
  run_id: string;
  status: string;
}

export interface RunRecord {
  run_id: string;
  status: 'queued' | 'running' | 'done' | 'failed';
  selection: SelectionDocument;
  dataset_id: string | null;
  error: string | null;
  events_count: number;
  progress: { phase: string | null; completed_cells: number; total_cells: number };
}

export interface ProgressEvent {
  run_id: string;
  phase: 'expanding' | 'optimizing' | 'generating' | 'curating' | 'persisting' | 'done' | 'failed';
  completed_cells: number;
  total_cells: number;
  message: string;
  timestamp: string;
}

export interface DatasetManifest {
  dataset_id: string;
  run_id: string;
  config_hash: string;
  template_version: string;
  label_counts: Record<string, number>;
  cell_counts: Record<string, Record<string, number>>;
  provider_profile_id: string;
  created_at: string;
  format: 'CSV' | 'JSON';
  data_file: string;
  size: number;
  curation_report: string | null;
  diversity_report: string | null;
  curation?: CurationReport;
}

export interface SamplePage {
  total: number;
  offset: number;
  limit: number;
  samples: { text: string; label: string }[];
}

export interface DiversityReport {
  ingf: number | null;
  aps: number | null;
  ingf_defined: boolean;
  aps_defined: boolean;
  n_samples: number;
  n_unique_ngrams: number;
  ngram_order: number;
  embedding_provider_id: string;
}

export interface CurationReport {
  input_count: number;
  after_dedup: number;
  after_filter: number;
  after_balance: number;
  removed_duplicate_ids: string[];
  removed_similar_ids: string[];
  removed_balance_ids: string[];
  class_counts_before: Record<string, number>;
  class_counts_after: Record<string, number>;
  removal_fraction: number;
  random_seed: number;
  balance: boolean;
  embedding_provider_id: string;
  warnings: string[];
}

export interface CurateResult {
  dataset_id: string;
  report: CurationReport;
}

export interface PaceCandidateTrace {
  user_text: string;
  score: number | null;
  selected: boolean;
  error: string | null;
}

export interface PaceIterationTrace {
  iteration: number;
  critiques: string[];
  candidates: PaceCandidateTrace[];
  incumbent_score_after: number | null;
  actor_calls: number;
  critic_calls: number;
  update_calls: number;
}

export interface PaceTrace {
  incumbent_score: number | null;
  iterations_completed: number;
  incumbent_prompt: { label_name: string; atomic_config_id: string; user_text: string };
  trace: PaceIterationTrace[];
}
