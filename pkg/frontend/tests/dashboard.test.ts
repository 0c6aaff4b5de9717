import { describe, expect, it } from "vitest";

import { fmtNumber } from "../src/dom.js";
import type {
  ImportanceDoc,
  ImportanceResponse,
  JobSnapshot,
  RunReport,
} from "../src/types.js";
import { createDashboard, type DashboardData } from "../src/views/dashboard.js";
import { fixture, freshRoot, provenanceViolations } from "./helpers.js";

function doneData(): DashboardData {
  return {
    snapshot: fixture("run_done.json").body as JobSnapshot,
    report: fixture("report_done.json").body as RunReport,
    importance: (fixture("importance_done.json").body as ImportanceResponse).importance,
  };
}

function render(data: DashboardData): HTMLElement {
  const root = freshRoot();
  const dash = createDashboard(root, data.snapshot.run_id);
  dash.update(data);
  return root;
}

describe("run dashboard", () => {
  it("renders one row per fold plus an aggregate row, straight from the fixture", () => {
    const data = doneData();
    render(data);
    const cv = data.report!.reports.cv!;

    const rows = document.querySelectorAll("table.folds tbody tr");
    expect(rows).toHaveLength(cv.folds.length + 1);

    const first = rows[0];
    expect(first.textContent).toContain(String(cv.folds[0].train_size));
    expect(first.textContent).toContain(String(cv.folds[0].val_size));
    expect(first.textContent).toContain(fmtNumber(cv.folds[0].scores.r2, 4));
    expect(first.textContent).toContain(fmtNumber(cv.folds[0].scores.mae, 4));
    expect(
      first.querySelector('[data-prov$="reports.cv.folds[0].scores.r2"]'),
    ).not.toBeNull();

    const agg = rows[rows.length - 1];
    expect(agg.classList.contains("aggregate")).toBe(true);
    expect(agg.textContent).toContain(fmtNumber(cv.aggregate.r2.mean, 4));
    expect(agg.textContent).toContain(fmtNumber(cv.aggregate.r2.std, 4));
    expect(agg.textContent).toContain(fmtNumber(cv.aggregate.mae.mean, 4));
    expect(agg.querySelector('[data-prov$="aggregate.r2.mean"]')).not.toBeNull();
  });

  it("scales aggregate bars from the fixture means", () => {
    const data = doneData();
    render(data);
    const cv = data.report!.reports.cv!;
    const bars = document.querySelectorAll(".aggregate-bars .metric-bar");
    expect(bars).toHaveLength(cv.metrics.length);

    const maxAbs = Math.max(...cv.metrics.map((m) => Math.abs(cv.aggregate[m].mean ?? 0)));
    cv.metrics.forEach((metric, i) => {
      const expected = Math.round((100 * Math.abs(cv.aggregate[metric].mean ?? 0)) / maxAbs);
      const fill = bars[i].querySelector<HTMLElement>(".bar-h")!;
      expect(fill.getAttribute("style")).toBe(`width:${expected}%`);
      expect(bars[i].textContent).toContain(fmtNumber(cv.aggregate[metric].mean, 4));
    });
  });

  it("lists the chosen hyperparameters for every searched fold", () => {
    const data = doneData();
    render(data);
    const cv = data.report!.reports.cv!;
    const rows = document.querySelectorAll("table.chosen tbody tr");
    expect(rows).toHaveLength(cv.folds.length);

    cv.folds.forEach((fold, i) => {
      const model = fold.config[fold.config.length - 1];
      const row = rows[i];
      expect(row.textContent).toContain(model.estimator);
      for (const [name, value] of Object.entries(model.params)) {
        expect(row.textContent).toContain(name);
        if (typeof value === "number") {
          expect(row.textContent).toContain(fmtNumber(value, 4));
        }
      }
    });
    expect(
      rows[0].querySelector('[data-prov*="folds[0].config"]'),
    ).not.toBeNull();
  });

  it("renders the stratified group table exactly as reported", () => {
    const data = doneData();
    render(data);
    const strat = data.report!.reports.cv!.stratified!;
    const rows = document.querySelectorAll("table.stratified tbody tr");
    expect(rows).toHaveLength(strat.groups.length);

    strat.groups.forEach((group, g) => {
      expect(rows[g].textContent).toContain(group.group);
      expect(rows[g].textContent).toContain(String(group.n));
      expect(rows[g].textContent).toContain(fmtNumber(group.scores.r2, 4));
      expect(
        rows[g].querySelector(`[data-prov$="stratified.groups[${g}].scores.r2"]`),
      ).not.toBeNull();
    });
  });

  it("caps importance at twenty bars and expands to the full fixture on demand", () => {
    const data = doneData();
    render(data);
    const charts = document.querySelectorAll(".imp-chart");
    expect(charts).toHaveLength(Object.keys(data.importance!).length);

    // alphabetical key order from the fixture: coef, permutation, permuted-target
    const permutation = charts[1];
    expect(permutation.querySelectorAll(".imp-row")).toHaveLength(20);

    const expand = permutation.querySelector<HTMLButtonElement>("button.expand")!;
    const total = data.importance!["permutation"].features.length;
    expect(expand.textContent).toContain(`show all ${total}`);
    expand.click();

    // the dashboard re-renders; only the expanded method shows everything
    expect(
      document.querySelectorAll(".imp-chart")[1].querySelectorAll(".imp-row"),
    ).toHaveLength(total);
    expect(
      document.querySelectorAll(".imp-chart")[0].querySelectorAll(".imp-row"),
    ).toHaveLength(20);
  });

  it("puts the strongest fixture feature on top with its exact value", () => {
    const data = doneData();
    render(data);
    const doc = data.importance!["permutation"];
    let best = 0;
    doc.values.forEach((v, i) => {
      if (Math.abs(v) > Math.abs(doc.values[best])) best = i;
    });
    const firstRow = document.querySelectorAll(".imp-chart")[1].querySelector(".imp-row")!;
    expect(firstRow.textContent).toContain(doc.features[best]);
    expect(firstRow.textContent).toContain(fmtNumber(doc.values[best], 4));
    expect(
      firstRow.querySelector(`[data-prov$="permutation.values[${best}]"]`),
    ).not.toBeNull();
  });

  it("marks significant p-values from the permuted-target fixture", () => {
    const data = doneData();
    render(data);
    const doc: ImportanceDoc = data.importance!["permuted-target"];
    const chart = document.querySelectorAll(".imp-chart")[2];
    chart.querySelector<HTMLButtonElement>("button.expand")!.click();

    const expanded = document.querySelectorAll(".imp-chart")[2];
    const marks = expanded.querySelectorAll(".p-value");
    expect(marks).toHaveLength(doc.p_values!.length);
    const significant = doc.p_values!.filter((p) => p <= 0.05).length;
    expect(expanded.querySelectorAll(".p-value.significant")).toHaveLength(significant);
  });

  it("shows zero of the configured outer folds while queued", () => {
    const queued = fixture("run_queued.json").body as JobSnapshot;
    render({ snapshot: queued, report: null, importance: null });

    const progress = document.querySelector(".progress")!;
    expect(progress.textContent).toContain(
      `0 of ${queued.config.cv.outer.k} folds`,
    );
    expect(progress.querySelector('[data-prov$="config.cv.outer.k"]')).not.toBeNull();
    expect(document.querySelector("table.folds")).toBeNull();
  });

  it("surfaces the failure cause with a link to the log events", () => {
    const snapshot = fixture("run_failed.json").body as JobSnapshot;
    const report = fixture("report_failed.json").body as RunReport;
    render({ snapshot, report, importance: null });

    const failure = document.querySelector("section.failure")!;
    expect(failure.textContent).toContain(report.error!);
    expect(failure.querySelector("a.log-link")!.getAttribute("href")).toBe("#log");

    const log = document.querySelectorAll("ol.log li");
    expect(log).toHaveLength(report.log.length);
    expect(log[0].textContent).toContain(report.log[0].message);
    expect(document.querySelector("table.folds")).toBeNull();
  });

  it("tags every number on screen in all three states", () => {
    expect(provenanceViolations(render(doneData()))).toEqual([]);

    const queued = fixture("run_queued.json").body as JobSnapshot;
    expect(
      provenanceViolations(render({ snapshot: queued, report: null, importance: null })),
    ).toEqual([]);

    const failedData: DashboardData = {
      snapshot: fixture("run_failed.json").body as JobSnapshot,
      report: fixture("report_failed.json").body as RunReport,
      importance: null,
    };
    expect(provenanceViolations(render(failedData))).toEqual([]);
  });
});
