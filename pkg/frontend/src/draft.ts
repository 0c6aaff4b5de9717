/** The pipeline builder's working state.
 *
 * A draft mirrors the RunConfig sections a user assembles in the form.
 * `draftToConfig` emits the exact document POST /runs accepts;
 * `validateDraft` applies the same rules the server enforces so errors
 * appear inline before launch. Drafts persist in localStorage and
 * survive a page reload.
 */

import { METRICS, estimator } from "./catalog.js";
import type {
  ParamDist,
  ProblemType,
  RunConfig,
  SchemeDoc,
  StepDoc,
  StepKind,
  ValidationIssue,
} from "./types.js";

export interface ParamDraft {
  dist: "fixed" | "choice" | "int_range" | "float_range";
  value?: unknown;
  values?: unknown[];
  lo?: number;
  hi?: number;
  scale?: "linear" | "log";
}

export interface StepDraft {
  kind: StepKind;
  estimator: string;
  params: Record<string, ParamDraft>;
}

export interface SchemeDraft {
  kind: SchemeDoc["kind"];
  k: number;
  stratify_column: string | null;
  group_column: string | null;
}

export interface SearchDraft {
  kind: "random" | "evolutionary";
  budget: number;
}

export interface SplitDraft {
  test_fraction: number;
  stratify_by: string | null;
  group_by: string | null;
}

export interface ImportanceDraft {
  methods: ("coef" | "permutation" | "permuted-target" | "shapley")[];
  rows: "train" | "test";
}

export interface Draft {
  datasetId: string | null;
  target: string | null;
  nonInput: string[];
  problemType: ProblemType;
  preSteps: StepDraft[];
  /** Several entries mean "compare models": they become one Select node. */
  models: StepDraft[];
  outer: SchemeDraft;
  inner: SchemeDraft | null;
  search: SearchDraft | null;
  metrics: string[];
  objective: string | null;
  split: SplitDraft | null;
  importance: ImportanceDraft | null;
  stratifyReportBy: string | null;
  seed: number;
}

export function emptyDraft(): Draft {
  return {
    datasetId: null,
    target: null,
    nonInput: [],
    problemType: "regression",
    preSteps: [],
    models: [],
    outer: { kind: "kfold", k: 5, stratify_column: null, group_column: null },
    inner: null,
    search: null,
    metrics: [],
    objective: null,
    split: null,
    importance: null,
    stratifyReportBy: null,
    seed: 0,
  };
}

function paramToDist(p: ParamDraft): ParamDist {
  switch (p.dist) {
    case "fixed":
      // bare values are the fixed-parameter shorthand
      return p.value as ParamDist;
    case "choice":
      return { dist: "choice", values: p.values ?? [] };
    case "int_range":
      return { dist: "int_range", lo: p.lo ?? 0, hi: p.hi ?? 0, scale: p.scale ?? "linear" };
    case "float_range":
      return { dist: "float_range", lo: p.lo ?? 0, hi: p.hi ?? 0, scale: p.scale ?? "linear" };
  }
}

function stepToDoc(step: StepDraft): StepDoc {
  const params: Record<string, ParamDist> = {};
  for (const [name, p] of Object.entries(step.params)) {
    params[name] = paramToDist(p);
  }
  return { kind: step.kind, estimator: step.estimator, params };
}

function schemeToDoc(s: SchemeDraft): SchemeDoc {
  const doc: SchemeDoc = { kind: s.kind };
  if (s.kind === "kfold" || s.kind === "stratified-kfold" || s.kind === "group-kfold") {
    doc.k = s.k;
  }
  if (s.kind === "stratified-kfold" && s.stratify_column) {
    doc.stratify_column = s.stratify_column;
  }
  if ((s.kind === "group-kfold" || s.kind === "leave-one-group-out") && s.group_column) {
    doc.group_column = s.group_column;
  }
  return doc;
}

export function draftToConfig(draft: Draft): RunConfig {
  const steps: StepDoc[] = draft.preSteps.map(stepToDoc);
  if (draft.models.length === 1) {
    steps.push(stepToDoc(draft.models[0]));
  } else if (draft.models.length > 1) {
    steps.push({ kind: "model", select: draft.models.map(stepToDoc) });
  }

  const config: RunConfig = {
    dataset: { id: draft.datasetId ?? "" },
    roles: { target: draft.target ?? "" },
    pipeline: { problem_type: draft.problemType, steps },
    cv: { outer: schemeToDoc(draft.outer) },
    metrics: [...draft.metrics],
    seed: draft.seed,
  };
  if (draft.nonInput.length) config.roles.non_input = [...draft.nonInput];
  if (draft.inner) config.cv.inner = schemeToDoc(draft.inner);
  if (draft.search) {
    config.search = { kind: draft.search.kind, budget: draft.search.budget };
    config.objective_metric = draft.objective;
  }
  if (draft.split) {
    config.split = { test_fraction: draft.split.test_fraction };
    if (draft.split.stratify_by) config.split.stratify_by = draft.split.stratify_by;
    if (draft.split.group_by) config.split.group_by = draft.split.group_by;
  }
  if (draft.importance) {
    config.importance = {
      methods: [...draft.importance.methods],
      rows: draft.importance.rows,
    };
  }
  if (draft.stratifyReportBy) config.stratify_report_by = draft.stratifyReportBy;
  return config;
}

function needsColumn(s: SchemeDraft): string | null {
  if (s.kind === "stratified-kfold" && !s.stratify_column) {
    return "stratified folds need a stratify column";
  }
  if ((s.kind === "group-kfold" || s.kind === "leave-one-group-out") && !s.group_column) {
    return "grouped folds need a group column";
  }
  return null;
}

function checkScheme(s: SchemeDraft, path: string, issues: ValidationIssue[]): void {
  if (s.kind !== "leave-one-group-out" && (!Number.isInteger(s.k) || s.k < 2)) {
    issues.push({ path: `${path}.k`, message: "k must be an integer of at least 2" });
  }
  const missing = needsColumn(s);
  if (missing) issues.push({ path: path, message: missing });
}

/** Same rules the server applies, reported with the same dotted paths. */
export function validateDraft(draft: Draft): ValidationIssue[] {
  const issues: ValidationIssue[] = [];
  const known = new Set(METRICS.map((m) => m.id));

  if (!draft.datasetId) {
    issues.push({ path: "dataset", message: "either path or id is required" });
  }
  if (!draft.target) {
    issues.push({ path: "roles.target", message: "a target column is required" });
  }
  if (draft.target && draft.nonInput.includes(draft.target)) {
    issues.push({ path: "roles.non_input", message: "target cannot also be non-input" });
  }

  if (draft.models.length === 0) {
    issues.push({ path: "pipeline.steps", message: "a model step is required" });
  }
  for (const [i, model] of draft.models.entries()) {
    const info = estimator(model.estimator);
    if (info && !info.tasks.includes(draft.problemType)) {
      issues.push({
        path: `pipeline.steps`,
        message: `${model.estimator} does not support ${draft.problemType} problems`,
      });
    }
    for (const [name, p] of Object.entries(model.params)) {
      if (p.dist === "choice" && (!p.values || p.values.length === 0)) {
        issues.push({
          path: `pipeline.steps`,
          message: `${model.estimator}.${name}: a choice needs at least one value`,
        });
      }
      if ((p.dist === "int_range" || p.dist === "float_range") && (p.lo ?? 0) > (p.hi ?? 0)) {
        issues.push({
          path: `pipeline.steps`,
          message: `${model.estimator}.${name}: range lo exceeds hi`,
        });
      }
      if (p.scale === "log" && (p.lo ?? 0) <= 0) {
        issues.push({
          path: `pipeline.steps`,
          message: `${model.estimator}.${name}: log scale needs lo > 0`,
        });
      }
      void i;
    }
  }

  checkScheme(draft.outer, "cv.outer", issues);
  if (draft.inner) checkScheme(draft.inner, "cv.inner", issues);

  if (draft.metrics.length === 0) {
    issues.push({ path: "metrics", message: "at least one metric is required" });
  }
  for (const [i, m] of draft.metrics.entries()) {
    const entry = METRICS.find((e) => e.id === m);
    if (!entry) {
      issues.push({ path: `metrics[${i}]`, message: `unknown metric '${m}'` });
    } else if (!entry.tasks.includes(draft.problemType)) {
      issues.push({
        path: `metrics[${i}]`,
        message: `${m} does not apply to ${draft.problemType} problems`,
      });
    }
  }

  if (draft.search) {
    if (!draft.inner) {
      issues.push({ path: "cv.inner", message: "search requires an inner cv scheme" });
    }
    if (!draft.objective) {
      issues.push({ path: "objective_metric", message: "search requires an objective metric" });
    } else if (!known.has(draft.objective)) {
      issues.push({ path: "objective_metric", message: `unknown metric '${draft.objective}'` });
    } else if (!draft.metrics.includes(draft.objective)) {
      issues.push({
        path: "objective_metric",
        message: "objective metric must be listed in metrics",
      });
    }
    if (!Number.isInteger(draft.search.budget) || draft.search.budget < 1) {
      issues.push({ path: "search.budget", message: "budget must be a positive integer" });
    }
  }

  if (draft.split) {
    const f = draft.split.test_fraction;
    if (!(f > 0 && f < 1)) {
      issues.push({
        path: "split.test_fraction",
        message: "test fraction must lie strictly between zero and one",
      });
    }
  }

  if (draft.importance) {
    if (draft.importance.methods.length === 0) {
      issues.push({ path: "importance.methods", message: "pick at least one method" });
    }
    if (draft.importance.rows === "test" && !draft.split) {
      issues.push({ path: "importance.rows", message: "rows='test' requires a holdout split" });
    }
  }

  if (!Number.isInteger(draft.seed)) {
    issues.push({ path: "seed", message: "seed must be an integer" });
  }
  return issues;
}

const DRAFT_KEY = "wb.draft.v1";

export function saveDraft(draft: Draft): void {
  localStorage.setItem(DRAFT_KEY, JSON.stringify(draft));
}

export function loadDraft(): Draft | null {
  const raw = localStorage.getItem(DRAFT_KEY);
  if (!raw) return null;
  try {
    // merge over defaults so drafts saved by older builds stay loadable
    return { ...emptyDraft(), ...(JSON.parse(raw) as Partial<Draft>) };
  } catch {
    return null;
  }
}

export function clearDraft(): void {
  localStorage.removeItem(DRAFT_KEY);
}
