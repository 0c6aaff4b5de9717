/** Pipeline builder: assembles a run config from catalog-driven pickers
 * and distribution widgets, validates the draft client-side with the same
 * dotted paths the server uses, and launches the run. Server-side 400s
 * land inline on the same fields.
 */

import { estimator, METRICS, metricsFor, modelsFor, preprocessors } from "../catalog.js";
import type { ParamInfo } from "../catalog.js";
import { clear, el } from "../dom.js";
import {
  draftToConfig,
  emptyDraft,
  saveDraft,
  validateDraft,
  type Draft,
  type ParamDraft,
  type SchemeDraft,
  type StepDraft,
} from "../draft.js";
import type { DatasetMeta, ProblemType, RunConfig, SchemeDoc, ValidationIssue } from "../types.js";

export interface BuilderHooks {
  onLaunch: (config: RunConfig) => Promise<void>;
}

const SCHEME_KINDS: SchemeDoc["kind"][] = [
  "kfold",
  "stratified-kfold",
  "group-kfold",
  "leave-one-group-out",
];
const IMPORTANCE_METHODS = ["coef", "permutation", "permuted-target", "shapley"] as const;

/** Empty inputs become NaN, not zero, so validation can tell them apart. */
function parseNum(raw: string): number {
  const t = raw.trim();
  return t === "" ? Number.NaN : Number(t);
}

function parseToken(kind: ParamInfo["kind"], raw: string): unknown {
  const t = raw.trim();
  if (t === "" || t === "none") return null;
  if (kind === "int" || kind === "float") return Number(t);
  if (kind === "bool") return t === "true";
  return t;
}

function show(value: unknown): string {
  if (value === null || value === undefined) return "";
  return String(value);
}

export function createBuilder(
  root: HTMLElement,
  datasets: DatasetMeta[],
  initial: Draft | null,
  hooks: BuilderHooks,
) {
  let draft: Draft = initial ?? emptyDraft();
  let issues: ValidationIssue[] = [];
  let launchError: string | null = null;
  let validated = false;

  function issuesAt(path: string): ValidationIssue[] {
    return issues.filter((issue) => issue.path === path || issue.path.startsWith(path + "."));
  }

  function issueList(path: string): HTMLElement | null {
    const here = issuesAt(path);
    if (!here.length) return null;
    const list = el("ul", { class: "issues", "data-path": path });
    for (const issue of here) {
      list.append(
        el("li", { "data-prov": `draft#${issue.path}` }, `${issue.path}: ${issue.message}`),
      );
    }
    return list;
  }

  function changed(): void {
    saveDraft(draft);
    if (validated) issues = validateDraft(draft);
    render();
  }

  function textField(
    label: string,
    value: string,
    apply: (v: string) => void,
  ): HTMLElement {
    const input = el("input", {
      type: "text",
      value,
      change: (e: Event) => {
        apply((e.target as HTMLInputElement).value);
        changed();
      },
    });
    return el("label", { class: "field" }, label, input);
  }

  function selectField(
    label: string,
    options: { value: string; label?: string }[],
    current: string,
    apply: (v: string) => void,
    prov?: string,
  ): HTMLElement {
    const select = el("select", {
      ...(prov ? { "data-prov": prov } : {}),
      change: (e: Event) => {
        apply((e.target as HTMLSelectElement).value);
        changed();
      },
    });
    for (const opt of options) {
      const node = el("option", { value: opt.value }, opt.label ?? opt.value);
      if (opt.value === current) node.setAttribute("selected", "");
      select.append(node);
    }
    return el("label", { class: "field" }, label, select);
  }

  function checkboxRow(
    values: readonly string[],
    chosen: readonly string[],
    apply: (next: string[]) => void,
  ): HTMLElement {
    const row = el("div", { class: "checkbox-row" });
    for (const value of values) {
      const box = el("input", {
        type: "checkbox",
        value,
        change: (e: Event) => {
          const on = (e.target as HTMLInputElement).checked;
          const next = chosen.filter((v) => v !== value);
          if (on) next.push(value);
          apply(next);
          changed();
        },
      }) as HTMLInputElement;
      box.checked = chosen.includes(value);
      row.append(el("label", { class: "check" }, box, value));
    }
    return row;
  }

  // --- dataset & roles ---

  function datasetSection(): HTMLElement {
    const options = datasets.map((meta) => ({ value: meta.dataset_id }));
    options.unshift({ value: "" });
    return el(
      "section",
      { class: "builder-section" },
      el("h3", {}, "Dataset"),
      selectField(
        "dataset",
        options,
        draft.datasetId ?? "",
        (v) => {
          draft.datasetId = v || null;
          const meta = datasets.find((m) => m.dataset_id === v);
          if (meta && !draft.target && meta.roles.target) {
            draft.target = meta.roles.target;
          }
        },
        "GET /datasets#[].dataset_id",
      ),
      textField("target column", draft.target ?? "", (v) => {
        draft.target = v.trim() || null;
      }),
      textField("non-input columns (comma separated)", draft.nonInput.join(", "), (v) => {
        draft.nonInput = v.split(",").map((s) => s.trim()).filter(Boolean);
      }),
      selectField(
        "problem type",
        [{ value: "regression" }, { value: "binary" }, { value: "categorical" }],
        draft.problemType,
        (v) => {
          draft.problemType = v as ProblemType;
          draft.models = draft.models.filter((m) => {
            const entry = estimator(m.estimator);
            return entry !== undefined && entry.tasks.includes(draft.problemType);
          });
          draft.metrics = draft.metrics.filter((m) =>
            METRICS.some((entry) => entry.id === m && entry.tasks.includes(draft.problemType)),
          );
        },
      ),
      issueList("dataset") ?? "",
      issueList("roles") ?? "",
    );
  }

  // --- parameter distributions ---

  function seedParam(dist: string, previous: ParamDraft, info: ParamInfo | undefined): ParamDraft {
    switch (dist) {
      case "choice":
        return { dist: "choice", values: previous.value !== undefined ? [previous.value] : [] };
      case "int_range":
        return { dist: "int_range", lo: 0, hi: 0, scale: "linear" };
      case "float_range":
        return { dist: "float_range", lo: 0, hi: 0, scale: "linear" };
      default:
        return { dist: "fixed", value: previous.value ?? info?.default ?? null };
    }
  }

  function paramWidget(step: StepDraft, name: string, param: ParamDraft): HTMLElement {
    const info = estimator(step.estimator)?.params[name];
    const kind = info?.kind ?? "string";
    const widget = el(
      "div",
      { class: "param" },
      el("span", { class: "param-name" }, name),
      selectField(
        "",
        [
          { value: "fixed" },
          { value: "choice" },
          { value: "int_range" },
          { value: "float_range" },
        ],
        param.dist,
        (v) => {
          step.params[name] = seedParam(v, param, info);
        },
      ),
    );
    if (param.dist === "fixed") {
      widget.append(
        textField("value", show(param.value), (v) => {
          param.value = parseToken(kind, v);
        }),
      );
    } else if (param.dist === "choice") {
      widget.append(
        textField("values (comma separated)", (param.values ?? []).map(show).join(", "), (v) => {
          param.values = v
            .split(",")
            .map((s) => s.trim())
            .filter(Boolean)
            .map((token) => parseToken(kind, token));
        }),
      );
    } else {
      widget.append(
        textField("low", show(param.lo), (v) => {
          param.lo = parseNum(v);
        }),
        textField("high", show(param.hi), (v) => {
          param.hi = parseNum(v);
        }),
      );
      if (param.dist === "float_range") {
        widget.append(
          selectField(
            "scale",
            [{ value: "linear" }, { value: "log" }],
            param.scale ?? "linear",
            (v) => {
              param.scale = v as "linear" | "log";
            },
          ),
        );
      }
    }
    return widget;
  }

  function stepEditor(
    step: StepDraft,
    onRemove: () => void,
    choices: { value: string }[],
  ): HTMLElement {
    const editor = el(
      "div",
      { class: "step-editor" },
      selectField("estimator", choices, step.estimator, (v) => {
        step.estimator = v;
        const entry = estimator(v);
        if (entry) step.kind = entry.kind;
        step.params = {};
      }),
      el(
        "button",
        {
          class: "remove",
          click: () => {
            onRemove();
            changed();
          },
        },
        "remove",
      ),
    );
    const entry = estimator(step.estimator);
    if (entry && Object.keys(entry.params).length) {
      const params = el("div", { class: "params" });
      for (const name of Object.keys(entry.params)) {
        if (name in step.params) params.append(paramWidget(step, name, step.params[name]));
      }
      const missing = Object.keys(entry.params).filter((n) => !(n in step.params));
      if (missing.length) {
        const adder = el("select", {
          class: "add-param",
          change: (e: Event) => {
            const name = (e.target as HTMLSelectElement).value;
            if (!name) return;
            step.params[name] = { dist: "fixed", value: entry.params[name].default };
            changed();
          },
        });
        adder.append(el("option", { value: "" }, "set a parameter"));
        for (const name of missing) adder.append(el("option", { value: name }, name));
        params.append(adder);
      }
      editor.append(params);
    }
    return editor;
  }

  // --- pipeline ---

  function pipelineSection(): HTMLElement {
    const section = el("section", { class: "builder-section" }, el("h3", {}, "Pipeline"));

    const pre = el("div", { class: "pre-steps" }, el("h4", {}, "Preprocessing"));
    draft.preSteps.forEach((step, i) => {
      pre.append(
        stepEditor(
          step,
          () => {
            draft.preSteps.splice(i, 1);
          },
          preprocessors().map((e) => ({ value: e.id })),
        ),
      );
    });
    pre.append(
      el(
        "button",
        {
          class: "add-step",
          click: () => {
            const first = preprocessors()[0];
            draft.preSteps.push({ kind: first.kind, estimator: first.id, params: {} });
            changed();
          },
        },
        "add preprocessing step",
      ),
    );
    section.append(pre);

    const models = el("div", { class: "model-steps" }, el("h4", {}, "Model"));
    const available = modelsFor(draft.problemType).map((e) => ({ value: e.id }));
    draft.models.forEach((step, i) => {
      models.append(
        stepEditor(
          step,
          () => {
            draft.models.splice(i, 1);
          },
          available,
        ),
      );
    });
    models.append(
      el(
        "button",
        {
          class: "add-model",
          click: () => {
            const pool = modelsFor(draft.problemType);
            if (!pool.length) return;
            draft.models.push({ kind: "model", estimator: pool[0].id, params: {} });
            changed();
          },
        },
        draft.models.length ? "compare another model" : "add model",
      ),
    );
    if (draft.models.length > 1) {
      models.append(
        el("p", { class: "hint" }, "the winning model is chosen per fold by the inner search"),
      );
    }
    section.append(models);
    const inline = issueList("pipeline");
    if (inline) section.append(inline);
    return section;
  }

  // --- cross-validation & search ---

  function schemeEditor(label: string, scheme: SchemeDraft, path: string): HTMLElement {
    const box = el("div", { class: "scheme" }, el("h4", {}, label));
    box.append(
      selectField(
        "scheme",
        SCHEME_KINDS.map((value) => ({ value })),
        scheme.kind,
        (v) => {
          scheme.kind = v as SchemeDoc["kind"];
        },
      ),
    );
    if (scheme.kind !== "leave-one-group-out") {
      box.append(
        textField("folds", show(scheme.k), (v) => {
          scheme.k = parseNum(v);
        }),
      );
    }
    if (scheme.kind === "stratified-kfold") {
      box.append(
        textField("stratify by", scheme.stratify_column ?? "", (v) => {
          scheme.stratify_column = v.trim() || null;
        }),
      );
    }
    if (scheme.kind === "group-kfold" || scheme.kind === "leave-one-group-out") {
      box.append(
        textField("group by", scheme.group_column ?? "", (v) => {
          scheme.group_column = v.trim() || null;
        }),
      );
    }
    const inline = issueList(path);
    if (inline) box.append(inline);
    return box;
  }

  function cvSection(): HTMLElement {
    const section = el(
      "section",
      { class: "builder-section" },
      el("h3", {}, "Cross-validation"),
      schemeEditor("Outer", draft.outer, "cv.outer"),
    );

    const allParams = [...draft.preSteps, ...draft.models].flatMap((s) => Object.values(s.params));
    const needsSearch = draft.models.length > 1 || allParams.some((p) => p.dist !== "fixed");

    const toggle = el("input", {
      type: "checkbox",
      change: (e: Event) => {
        const on = (e.target as HTMLInputElement).checked;
        if (on) {
          draft.inner = { kind: "kfold", k: 3, stratify_column: null, group_column: null };
          draft.search = draft.search ?? { kind: "random", budget: 16 };
        } else {
          draft.inner = null;
          draft.search = null;
        }
        changed();
      },
    }) as HTMLInputElement;
    toggle.checked = draft.inner !== null;
    section.append(el("label", { class: "check" }, toggle, "tune with an inner loop"));
    if (needsSearch && !draft.inner) {
      section.append(
        el("p", { class: "hint" }, "distributions and model comparison need an inner loop"),
      );
    }
    if (draft.inner) {
      section.append(schemeEditor("Inner", draft.inner, "cv.inner"));
      const search = draft.search ?? { kind: "random" as const, budget: 16 };
      draft.search = search;
      section.append(
        selectField(
          "search strategy",
          [{ value: "random" }, { value: "evolutionary" }],
          search.kind,
          (v) => {
            search.kind = v as "random" | "evolutionary";
          },
        ),
        textField("budget (configurations tried)", show(search.budget), (v) => {
          search.budget = parseNum(v);
        }),
      );
      const inline = issueList("search");
      if (inline) section.append(inline);
    }
    return section;
  }

  // --- metrics, split, importance ---

  function metricsSection(): HTMLElement {
    const ids = metricsFor(draft.problemType).map((m) => m.id);
    const section = el(
      "section",
      { class: "builder-section" },
      el("h3", {}, "Metrics"),
      checkboxRow(ids, draft.metrics, (next) => {
        draft.metrics = ids.filter((id) => next.includes(id));
        if (draft.objective && !draft.metrics.includes(draft.objective)) draft.objective = null;
      }),
    );
    if (draft.inner) {
      section.append(
        selectField(
          "objective metric (guides the search)",
          [{ value: "", label: "pick one" }, ...draft.metrics.map((value) => ({ value }))],
          draft.objective ?? "",
          (v) => {
            draft.objective = v || null;
          },
        ),
      );
    }
    const metricIssues = issueList("metrics");
    if (metricIssues) section.append(metricIssues);
    const objectiveIssues = issueList("objective_metric");
    if (objectiveIssues) section.append(objectiveIssues);
    return section;
  }

  function splitSection(): HTMLElement {
    const toggle = el("input", {
      type: "checkbox",
      change: (e: Event) => {
        const on = (e.target as HTMLInputElement).checked;
        draft.split = on ? { test_fraction: 0.2, stratify_by: null, group_by: null } : null;
        changed();
      },
    }) as HTMLInputElement;
    toggle.checked = draft.split !== null;
    const section = el(
      "section",
      { class: "builder-section" },
      el("h3", {}, "Holdout split"),
      el("label", { class: "check" }, toggle, "carve out a test set before anything else"),
    );
    if (draft.split) {
      const split = draft.split;
      section.append(
        textField("test fraction", show(split.test_fraction), (v) => {
          split.test_fraction = parseNum(v);
        }),
        textField("stratify by (optional)", split.stratify_by ?? "", (v) => {
          split.stratify_by = v.trim() || null;
        }),
        textField("group by (optional)", split.group_by ?? "", (v) => {
          split.group_by = v.trim() || null;
        }),
      );
    }
    const inline = issueList("split");
    if (inline) section.append(inline);
    return section;
  }

  function importanceSection(): HTMLElement {
    const toggle = el("input", {
      type: "checkbox",
      change: (e: Event) => {
        const on = (e.target as HTMLInputElement).checked;
        draft.importance = on ? { methods: ["permutation"], rows: "train" } : null;
        changed();
      },
    }) as HTMLInputElement;
    toggle.checked = draft.importance !== null;
    const section = el(
      "section",
      { class: "builder-section" },
      el("h3", {}, "Feature importance"),
      el("label", { class: "check" }, toggle, "measure feature importance"),
    );
    if (draft.importance) {
      const imp = draft.importance;
      section.append(
        checkboxRow(IMPORTANCE_METHODS, imp.methods, (next) => {
          imp.methods = IMPORTANCE_METHODS.filter((m) => next.includes(m));
        }),
        selectField("rows", [{ value: "train" }, { value: "test" }], imp.rows, (v) => {
          imp.rows = v as "train" | "test";
        }),
      );
    }
    const inline = issueList("importance");
    if (inline) section.append(inline);
    return section;
  }

  function reportSection(): HTMLElement {
    return el(
      "section",
      { class: "builder-section" },
      el("h3", {}, "Report"),
      textField("stratify report by (optional column)", draft.stratifyReportBy ?? "", (v) => {
        draft.stratifyReportBy = v.trim() || null;
      }),
      textField("seed", show(draft.seed), (v) => {
        draft.seed = parseNum(v);
      }),
      issueList("seed") ?? "",
      issueList("stratify_report_by") ?? "",
    );
  }

  // --- launch ---

  async function launch(): Promise<void> {
    issues = validateDraft(draft);
    validated = true;
    launchError = null;
    if (issues.length) {
      render();
      return;
    }
    try {
      await hooks.onLaunch(draftToConfig(draft));
    } catch (err) {
      const failure = err as { errors?: ValidationIssue[]; message?: string };
      if (failure.errors && failure.errors.length) {
        issues = failure.errors;
      } else {
        launchError = failure.message ?? String(err);
      }
      render();
    }
  }

  function launchSection(): HTMLElement {
    const blocked = validated && issues.length > 0;
    const section = el(
      "section",
      { class: "builder-section launch" },
      el(
        "button",
        {
          class: "validate",
          click: () => {
            issues = validateDraft(draft);
            validated = true;
            render();
          },
        },
        "validate",
      ),
      el(
        "button",
        {
          class: "launch",
          disabled: blocked,
          click: () => {
            void launch();
          },
        },
        "launch run",
      ),
    );
    if (validated && !issues.length) {
      section.append(el("p", { class: "ok" }, "configuration looks valid"));
    }
    if (blocked) {
      section.append(el("p", { class: "error" }, "fix the issues above before launching"));
    }
    if (launchError) {
      section.append(
        el("p", { class: "error launch-error", "data-prov": "POST /runs#detail" }, launchError),
      );
    }
    return section;
  }

  function render(): void {
    const page = el(
      "div",
      { class: "builder" },
      el("h2", {}, "Build a run"),
      datasetSection(),
      pipelineSection(),
      cvSection(),
      metricsSection(),
      splitSection(),
      importanceSection(),
      reportSection(),
      launchSection(),
    );
    clear(root).append(page);
  }

  render();

  return {
    get draft() {
      return draft;
    },
    setDraft(next: Draft) {
      draft = next;
      render();
    },
    validate() {
      issues = validateDraft(draft);
      validated = true;
      render();
      return issues;
    },
    config(): RunConfig {
      return draftToConfig(draft);
    },
    launch,
  };
}
