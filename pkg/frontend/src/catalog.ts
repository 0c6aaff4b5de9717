/** Client-side mirror of the server's estimator and metric registries.
 *
 * Used to offer pickers and to validate drafts before launch; the server
 * remains the authority and re-validates every submitted config.
 */

import type { ProblemType, StepKind } from "./types.js";

export interface ParamInfo {
  default: unknown;
  kind: "int" | "float" | "string" | "bool";
}

export interface EstimatorEntry {
  id: string;
  kind: StepKind;
  tasks: ProblemType[];
  params: Record<string, ParamInfo>;
}

export const ESTIMATORS: EstimatorEntry[] = [
  { id: "impute_mean", kind: "imputer", tasks: [], params: {} },
  { id: "impute_median", kind: "imputer", tasks: [], params: {} },
  { id: "onehot", kind: "encoder", tasks: [], params: {} },
  { id: "scaler_standard", kind: "scaler", tasks: [], params: {} },
  { id: "scaler_robust", kind: "scaler", tasks: [], params: {} },
  {
    id: "select_univariate",
    kind: "selector",
    tasks: [],
    params: { k: { default: 10, kind: "int" } },
  },
  {
    id: "select_variance",
    kind: "selector",
    tasks: [],
    params: { threshold: { default: 0.0, kind: "float" } },
  },
  {
    id: "ridge",
    kind: "model",
    tasks: ["regression"],
    params: { alpha: { default: 1.0, kind: "float" } },
  },
  {
    id: "logistic",
    kind: "model",
    tasks: ["binary", "categorical"],
    params: { alpha: { default: 1.0, kind: "float" } },
  },
  {
    id: "knn",
    kind: "model",
    tasks: ["regression", "binary", "categorical"],
    params: { k: { default: 5, kind: "int" } },
  },
  {
    id: "dtree",
    kind: "model",
    tasks: ["regression", "binary", "categorical"],
    params: {
      max_depth: { default: null, kind: "int" },
      min_samples_split: { default: 2, kind: "int" },
    },
  },
  {
    id: "forest",
    kind: "model",
    tasks: ["regression", "binary", "categorical"],
    params: {
      n_trees: { default: 10, kind: "int" },
      max_depth: { default: null, kind: "int" },
      min_samples_split: { default: 2, kind: "int" },
      max_features: { default: "sqrt", kind: "string" },
      bootstrap: { default: true, kind: "bool" },
    },
  },
];

export interface MetricEntry {
  id: string;
  tasks: ProblemType[];
  direction: "higher-better" | "lower-better";
}

export const METRICS: MetricEntry[] = [
  { id: "r2", tasks: ["regression"], direction: "higher-better" },
  { id: "mae", tasks: ["regression"], direction: "lower-better" },
  { id: "rmse", tasks: ["regression"], direction: "lower-better" },
  { id: "accuracy", tasks: ["binary", "categorical"], direction: "higher-better" },
  { id: "balanced_accuracy", tasks: ["binary", "categorical"], direction: "higher-better" },
  { id: "macro_f1", tasks: ["binary", "categorical"], direction: "higher-better" },
  { id: "log_loss", tasks: ["binary", "categorical"], direction: "lower-better" },
  { id: "roc_auc", tasks: ["binary"], direction: "higher-better" },
];

export function estimator(id: string): EstimatorEntry | undefined {
  return ESTIMATORS.find((e) => e.id === id);
}

export function modelsFor(problem: ProblemType): EstimatorEntry[] {
  return ESTIMATORS.filter((e) => e.kind === "model" && e.tasks.includes(problem));
}

export function metricsFor(problem: ProblemType): MetricEntry[] {
  return METRICS.filter((m) => m.tasks.includes(problem));
}

export function preprocessors(): EstimatorEntry[] {
  return ESTIMATORS.filter((e) => e.kind !== "model");
}
