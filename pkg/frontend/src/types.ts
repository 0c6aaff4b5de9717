/** Document shapes of the workbench HTTP API (schema version 1). */

export type Dtype = "continuous" | "binary" | "categorical";
export type Role = "input-feature" | "target" | "non-input";
export type ProblemType = "regression" | "binary" | "categorical";
export type StepKind = "imputer" | "encoder" | "scaler" | "selector" | "model";

export interface Health {
  status: string;
  version: string;
}

export interface FingerprintDoc {
  n_rows: number;
  columns: { name: string; dtype: Dtype; hash: string }[];
}

export interface UploadResult {
  dataset_id: string;
  fingerprint: FingerprintDoc;
  n_rows: number;
  n_columns: number;
}

export interface RolesDoc {
  target: string | null;
  non_input: string[];
}

export interface DatasetMeta {
  dataset_id: string;
  fingerprint: FingerprintDoc;
  roles: Partial<RolesDoc>;
}

export interface HistogramDoc {
  edges: number[];
  counts: number[];
}

export interface OutlierGrid {
  k: number[];
  counts: number[];
}

export interface ColumnSummary {
  name: string;
  dtype: Dtype;
  role: Role;
  n: number;
  n_missing: number;
  mean: number | null;
  std: number | null;
  min: number | null;
  max: number | null;
  q25: number | null;
  q50: number | null;
  q75: number | null;
  n_unique: number;
  level_counts: Record<string, number> | null;
  histogram: HistogramDoc | null;
  outliers: OutlierGrid | null;
}

export interface DatasetSummary {
  dataset_id: string;
  n_rows: number;
  columns: ColumnSummary[];
}

// ---------------------------------------------------------------------------
// run configuration (the same document POST /runs validates)

export interface FixedDist {
  dist: "fixed";
  value: unknown;
}

export interface ChoiceDist {
  dist: "choice";
  values: unknown[];
}

export interface IntRangeDist {
  dist: "int_range";
  lo: number;
  hi: number;
  scale?: "linear" | "log";
}

export interface FloatRangeDist {
  dist: "float_range";
  lo: number;
  hi: number;
  scale?: "linear" | "log";
}

/** A bare value is shorthand for a fixed parameter. */
export type ParamDist =
  | FixedDist
  | ChoiceDist
  | IntRangeDist
  | FloatRangeDist
  | string
  | number
  | boolean
  | null;

export interface StepDoc {
  kind: StepKind;
  estimator?: string;
  params?: Record<string, ParamDist>;
  select?: StepDoc[];
  applies_to?: "all-input" | "continuous-only" | "categorical-only";
}

export interface SchemeDoc {
  kind: "kfold" | "stratified-kfold" | "group-kfold" | "leave-one-group-out";
  k?: number;
  stratify_column?: string | null;
  group_column?: string | null;
  seed?: number | null;
}

export interface SearchDoc {
  kind: "random" | "evolutionary";
  budget: number;
  seed?: number | null;
  mu?: number;
  lam?: number;
  mutation_scale?: number;
}

export interface SplitConfigDoc {
  test_fraction: number;
  stratify_by?: string | null;
  group_by?: string | null;
  seed?: number | null;
}

export interface ImportanceConfigDoc {
  methods: ("coef" | "permutation" | "permuted-target" | "shapley")[];
  rows: "train" | "test";
  metric?: string | null;
  n_repeats?: number;
  n_permutations?: number;
  shapley?: {
    mode?: "exact" | "sampled";
    n_coalitions?: number;
    n_instances?: number;
    background_size?: number;
  };
}

export interface RunConfig {
  dataset: { path?: string; id?: string; dtypes?: Record<string, Dtype>; missing_tokens?: string[] };
  roles: { target: string; non_input?: string[] };
  split?: SplitConfigDoc | null;
  pipeline: { problem_type: ProblemType; steps: StepDoc[] };
  cv: { outer: SchemeDoc; inner?: SchemeDoc };
  search?: SearchDoc | null;
  metrics: string[];
  objective_metric?: string | null;
  importance?: ImportanceConfigDoc | null;
  stratify_report_by?: string | null;
  subset?: { column: string; level: string } | null;
  seed?: number;
}

// ---------------------------------------------------------------------------
// job and report documents

export type JobStatus = "queued" | "running" | "done" | "failed" | "interrupted";

export interface JobProgress {
  phase: string | null;
  completed: number;
  total: number | null;
}

export interface JobSnapshot {
  run_id: string;
  status: JobStatus;
  progress: JobProgress;
  config: RunConfig;
  record_id: string | null;
  digest: string | null;
  record_status: string | null;
  error: string | null;
}

export interface StepChoiceDoc {
  estimator: string;
  params: Record<string, unknown>;
}

export interface TraceEntryDoc {
  index: number;
  config: StepChoiceDoc[];
  value: number | null;
  failed?: boolean;
  error?: string | null;
}

export interface SearchTraceDoc {
  entries: TraceEntryDoc[];
  direction: string;
  best_index: number;
  exhausted: boolean;
}

export interface FoldDoc {
  fold: string;
  train_size: number;
  val_size: number;
  config: StepChoiceDoc[];
  scores: Record<string, number | null>;
  flags?: Record<string, string>;
  failed?: boolean;
  error?: string;
  search?: SearchTraceDoc;
}

export interface AggregateCell {
  mean: number | null;
  std: number | null;
  n_folds: number;
}

export interface GroupScores {
  group: string;
  n: number;
  scores: Record<string, number | null>;
  flags: Record<string, string>;
}

export interface EvalDoc {
  kind: string;
  problem_type: ProblemType;
  metrics: string[];
  folds: FoldDoc[];
  aggregate: Record<string, AggregateCell>;
  provenance: Record<string, unknown>;
  warnings: string[];
  stratified: { column: string; groups: GroupScores[] } | null;
  subset: { column: string; level: string; n_rows: number } | null;
}

export interface ImportanceDoc {
  method: string;
  features: string[];
  values: number[];
  details: Record<string, unknown>;
  p_values?: number[];
  base_value?: number;
  class_levels?: string[];
}

export interface LogEvent {
  seq: number;
  ts: string;
  phase: string;
  message: string;
}

export interface SplitDoc {
  train_ids: number[];
  test_ids: number[];
  seed: number;
  strategy: string;
}

export interface RunReport {
  run_id: string;
  record_id: string;
  digest: string;
  status: string;
  seed: number;
  split: SplitDoc | null;
  reports: {
    cv?: EvalDoc;
    holdout?: EvalDoc;
    importance?: Record<string, ImportanceDoc>;
  };
  warnings: string[];
  error: string | null;
  log: LogEvent[];
}

export interface ImportanceResponse {
  run_id: string;
  record_id: string;
  importance: Record<string, ImportanceDoc>;
}

export interface RunAccepted {
  run_id: string;
  status: "queued";
}

export interface ValidationIssue {
  path: string;
  message: string;
}
