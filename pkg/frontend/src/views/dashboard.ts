/** Run dashboard: live status while a run executes, then fold tables,
 * aggregate bars, chosen hyperparameters, stratified scores, and
 * importance charts once it finishes. Renders exclusively from API
 * documents; bar geometry scales values, the numbers themselves are
 * provenance-tagged spans.
 */

import { clear, datum, el, num } from "../dom.js";
import type {
  EvalDoc,
  FoldDoc,
  ImportanceDoc,
  JobSnapshot,
  RunReport,
  StepChoiceDoc,
} from "../types.js";

export interface DashboardData {
  snapshot: JobSnapshot;
  report: RunReport | null;
  importance: Record<string, ImportanceDoc> | null;
}

const TOP_FEATURES = 20;

export function createDashboard(root: HTMLElement, runId: string) {
  const expanded = new Set<string>();
  let last: DashboardData | null = null;
  const stateBase = `GET /runs/${runId}#`;
  const reportBase = `GET /runs/${runId}/report#`;
  const impBase = `GET /runs/${runId}/importance#`;

  function progressLine(snap: JobSnapshot): HTMLElement {
    const line = el("div", { class: "progress" });
    const total = snap.progress.total;
    line.append(
      snap.progress.phase
        ? datum(snap.progress.phase, `${stateBase}progress.phase`)
        : "waiting",
      ": ",
      num(snap.progress.completed, `${stateBase}progress.completed`),
      " of ",
      total !== null
        ? num(total, `${stateBase}progress.total`)
        : num(snap.config.cv.outer.k ?? null, `${stateBase}config.cv.outer.k`),
      " folds",
    );
    return line;
  }

  function statusHeader(data: DashboardData): HTMLElement {
    const snap = data.snapshot;
    const head = el(
      "div",
      { class: "run-header" },
      el("h2", {}, "Run ", datum(snap.run_id, `${stateBase}run_id`)),
      el("span", { class: `badge status-${snap.status}`, "data-prov": `${stateBase}status` }, snap.status),
    );
    if (!data.report) head.append(progressLine(snap));
    if (data.report?.digest) {
      head.append(
        el("div", { class: "digest" }, "digest ", datum(data.report.digest, `${reportBase}digest`)),
      );
    }
    return head;
  }

  function failureSection(report: RunReport): HTMLElement | null {
    if (report.status !== "failed") return null;
    const section = el(
      "section",
      { class: "failure" },
      el("h3", {}, "Run failed"),
      el("p", { class: "error" }, datum(report.error ?? "unknown failure", `${reportBase}error`)),
      el("a", { href: "#log", class: "log-link" }, "jump to log events"),
    );
    return section;
  }

  function logSection(report: RunReport): HTMLElement {
    const list = el("ol", { class: "log", id: "log" });
    report.log.forEach((event, i) => {
      list.append(
        el(
          "li",
          {},
          datum(event.phase, `${reportBase}log[${i}].phase`),
          " ",
          datum(event.message, `${reportBase}log[${i}].message`),
        ),
      );
    });
    return el("section", {}, el("h3", {}, "Log"), list);
  }

  function scoreCell(fold: FoldDoc, i: number, metric: string, basePath: string): HTMLElement {
    const cell = el("td", {}, num(fold.scores[metric] ?? null, `${basePath}folds[${i}].scores.${metric}`));
    const flag = fold.flags?.[metric];
    if (flag) {
      const mark = datum("undefined", `${basePath}folds[${i}].flags.${metric}`);
      mark.classList.add("flag");
      mark.setAttribute("title", flag);
      cell.append(" ", mark);
    }
    return cell;
  }

  function foldTable(doc: EvalDoc, basePath: string): HTMLElement {
    const table = el("table", { class: "folds" });
    const head = el(
      "tr",
      {},
      el("th", {}, "fold"),
      el("th", {}, "train"),
      el("th", {}, "validation"),
    );
    for (const metric of doc.metrics) head.append(el("th", {}, metric));
    table.append(el("thead", {}, head));

    const body = el("tbody");
    doc.folds.forEach((fold, i) => {
      const row = el(
        "tr",
        { class: fold.failed ? "failed" : "" },
        el("td", {}, datum(fold.fold, `${basePath}folds[${i}].fold`)),
        el("td", {}, num(fold.train_size, `${basePath}folds[${i}].train_size`)),
        el("td", {}, num(fold.val_size, `${basePath}folds[${i}].val_size`)),
      );
      if (fold.failed) {
        row.append(
          el(
            "td",
            { colspan: String(doc.metrics.length) },
            datum(fold.error ?? "failed", `${basePath}folds[${i}].error`),
          ),
        );
      } else {
        for (const metric of doc.metrics) row.append(scoreCell(fold, i, metric, basePath));
      }
      body.append(row);
    });

    const agg = el("tr", { class: "aggregate" }, el("td", { colspan: "3" }, "aggregate"));
    for (const metric of doc.metrics) {
      const cell = doc.aggregate[metric];
      agg.append(
        el(
          "td",
          {},
          num(cell?.mean ?? null, `${basePath}aggregate.${metric}.mean`),
          " ± ",
          num(cell?.std ?? null, `${basePath}aggregate.${metric}.std`),
          " over ",
          num(cell?.n_folds ?? null, `${basePath}aggregate.${metric}.n_folds`),
          " folds",
        ),
      );
    }
    body.append(agg);
    table.append(body);
    return table;
  }

  function aggregateBars(doc: EvalDoc, basePath: string): HTMLElement {
    const section = el("div", { class: "aggregate-bars" });
    const means = doc.metrics
      .map((m) => Math.abs(doc.aggregate[m]?.mean ?? 0))
      .filter((v) => Number.isFinite(v));
    const max = Math.max(...means, 1e-12);
    for (const metric of doc.metrics) {
      const mean = doc.aggregate[metric]?.mean ?? null;
      const width = mean === null ? 0 : Math.round((100 * Math.abs(mean)) / max);
      section.append(
        el(
          "div",
          { class: "metric-bar" },
          el("span", { class: "metric-name" }, metric),
          el("div", { class: "bar-track" }, el("div", { class: "bar-h", style: `width:${width}%` })),
          num(mean, `${basePath}aggregate.${metric}.mean`),
        ),
      );
    }
    return section;
  }

  function chosenParams(config: StepChoiceDoc[], foldIndex: number, basePath: string): HTMLElement {
    const cell = el("td", {});
    config.forEach((step, j) => {
      const piece = el(
        "span",
        { class: "chosen-step" },
        datum(step.estimator, `${basePath}folds[${foldIndex}].config[${j}].estimator`),
      );
      const parts = Object.entries(step.params);
      if (parts.length) {
        piece.append("(");
        parts.forEach(([name, value], idx) => {
          if (idx > 0) piece.append(", ");
          piece.append(name, "=");
          const prov = `${basePath}folds[${foldIndex}].config[${j}].params.${name}`;
          piece.append(
            typeof value === "number" ? num(value, prov) : datum(String(value), prov),
          );
        });
        piece.append(")");
      }
      cell.append(piece, " ");
    });
    return cell;
  }

  function chosenTable(doc: EvalDoc, basePath: string): HTMLElement | null {
    if (!doc.folds.some((f) => f.search)) return null;
    const table = el(
      "table",
      { class: "chosen" },
      el("thead", {}, el("tr", {}, el("th", {}, "fold"), el("th", {}, "chosen pipeline"))),
    );
    const body = el("tbody");
    doc.folds.forEach((fold, i) => {
      if (fold.failed) return;
      body.append(
        el(
          "tr",
          {},
          el("td", {}, datum(fold.fold, `${basePath}folds[${i}].fold`)),
          chosenParams(fold.config, i, basePath),
        ),
      );
    });
    table.append(body);
    return el("section", {}, el("h3", {}, "Chosen hyperparameters"), table);
  }

  function stratifiedTable(doc: EvalDoc, basePath: string): HTMLElement | null {
    const strat = doc.stratified;
    if (!strat) return null;
    const table = el("table", { class: "stratified" });
    const head = el("tr", {}, el("th", {}, "group"), el("th", {}, "rows"));
    for (const metric of doc.metrics) head.append(el("th", {}, metric));
    table.append(el("thead", {}, head));
    const body = el("tbody");
    strat.groups.forEach((group, g) => {
      const row = el(
        "tr",
        {},
        el("td", {}, datum(group.group, `${basePath}stratified.groups[${g}].group`)),
        el("td", {}, num(group.n, `${basePath}stratified.groups[${g}].n`)),
      );
      for (const metric of doc.metrics) {
        row.append(
          el(
            "td",
            {},
            num(group.scores[metric] ?? null, `${basePath}stratified.groups[${g}].scores.${metric}`),
          ),
        );
      }
      body.append(row);
    });
    table.append(body);
    return el(
      "section",
      {},
      el("h3", {}, "By ", datum(strat.column, `${basePath}stratified.column`)),
      table,
    );
  }

  function importanceSection(methods: Record<string, ImportanceDoc>): HTMLElement {
    const section = el("section", { class: "importance" }, el("h3", {}, "Feature importance"));
    for (const [method, doc] of Object.entries(methods)) {
      section.append(importanceChart(method, doc));
    }
    return section;
  }

  function importanceChart(method: string, doc: ImportanceDoc): HTMLElement {
    const basePath = `${impBase}importance.${method}.`;
    const order = doc.values
      .map((value, i) => ({ value, i }))
      .sort((a, b) => Math.abs(b.value) - Math.abs(a.value));
    const showAll = expanded.has(method);
    const visible = showAll ? order : order.slice(0, TOP_FEATURES);
    const max = Math.max(...order.map((o) => Math.abs(o.value)), 1e-12);

    const chart = el("div", { class: "imp-chart" }, el("h4", {}, `[${method}]`));
    for (const { value, i } of visible) {
      const row = el(
        "div",
        { class: "imp-row" },
        datum(doc.features[i], `${basePath}features[${i}]`),
        el(
          "div",
          { class: "bar-track" },
          el("div", {
            class: `bar-h ${value < 0 ? "negative" : ""}`,
            style: `width:${Math.round((100 * Math.abs(value)) / max)}%`,
          }),
        ),
        num(value, `${basePath}values[${i}]`),
      );
      if (doc.p_values) {
        const p = num(doc.p_values[i], `${basePath}p_values[${i}]`);
        p.classList.add("p-value");
        if (doc.p_values[i] <= 0.05) p.classList.add("significant");
        row.append(el("span", { class: "p-wrap" }, "p=", p));
      }
      chart.append(row);
    }
    if (order.length > TOP_FEATURES) {
      chart.append(
        el(
          "button",
          {
            class: "expand",
            click: () => {
              if (showAll) expanded.delete(method);
              else expanded.add(method);
              if (last) update(last);
            },
          },
          showAll ? "show top features only" : "show all ",
          showAll ? "" : num(order.length, `${basePath}features.length`),
        ),
      );
    }
    return chart;
  }

  function warningsSection(report: RunReport): HTMLElement | null {
    if (!report.warnings.length) return null;
    const list = el("ul", { class: "warnings" });
    report.warnings.forEach((w, i) => {
      list.append(el("li", {}, datum(w, `${reportBase}warnings[${i}]`)));
    });
    return el("section", {}, el("h3", {}, "Warnings"), list);
  }

  function subsetBadge(doc: EvalDoc, basePath: string): HTMLElement | null {
    if (!doc.subset) return null;
    return el(
      "p",
      { class: "subset" },
      "subset: ",
      datum(doc.subset.column, `${basePath}subset.column`),
      " = ",
      datum(doc.subset.level, `${basePath}subset.level`),
      " (",
      num(doc.subset.n_rows, `${basePath}subset.n_rows`),
      " rows)",
    );
  }

  function update(data: DashboardData): void {
    last = data;
    const page = el("div", { class: "dashboard" }, statusHeader(data));
    const report = data.report;
    if (report) {
      const failure = failureSection(report);
      if (failure) page.append(failure);
      const cv = report.reports.cv;
      if (cv) {
        const section = el("section", {}, el("h3", {}, "Cross-validation"));
        const subset = subsetBadge(cv, `${reportBase}reports.cv.`);
        if (subset) section.append(subset);
        section.append(foldTable(cv, `${reportBase}reports.cv.`), aggregateBars(cv, `${reportBase}reports.cv.`));
        page.append(section);
        const chosen = chosenTable(cv, `${reportBase}reports.cv.`);
        if (chosen) page.append(chosen);
        const strat = stratifiedTable(cv, `${reportBase}reports.cv.`);
        if (strat) page.append(strat);
      }
      const holdout = report.reports.holdout;
      if (holdout) {
        page.append(
          el(
            "section",
            {},
            el("h3", {}, "Holdout test"),
            foldTable(holdout, `${reportBase}reports.holdout.`),
          ),
        );
      }
      if (data.importance && Object.keys(data.importance).length) {
        page.append(importanceSection(data.importance));
      }
      const warnings = warningsSection(report);
      if (warnings) page.append(warnings);
      page.append(logSection(report));
    }
    clear(root).append(page);
  }

  return { update };
}
