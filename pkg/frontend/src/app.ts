/** Hash-routed shell wiring the API client, the run pollers, and the
 * three views together. Fetch failures render an inline error with a
 * retry button instead of a blank page.
 */

import { ApiClient } from "./api.js";
import { clear, datum, el, num } from "./dom.js";
import { loadDraft } from "./draft.js";
import { isTerminal, RunPollers } from "./store.js";
import type { ImportanceDoc, JobSnapshot } from "./types.js";
import { createBuilder } from "./views/builder.js";
import { createDashboard } from "./views/dashboard.js";
import { createExplorer } from "./views/explorer.js";

export type App = ReturnType<typeof createApp>;

export function createApp(root: HTMLElement, api: ApiClient, pollIntervalMs = 1000) {
  const pollers = new RunPollers(api, pollIntervalMs);

  function nav(): HTMLElement {
    return el(
      "nav",
      {},
      el("a", { href: "#/" }, "datasets"),
      el("a", { href: "#/builder" }, "builder"),
      el("a", { href: "#/runs" }, "runs"),
    );
  }

  function shell(kind: string): HTMLElement {
    const section = el("main", { class: `view view-${kind}` });
    clear(root).append(nav(), section);
    return section;
  }

  function renderError(section: HTMLElement, err: unknown, retry: () => void): void {
    const message = err instanceof Error ? err.message : String(err);
    clear(section).append(
      el(
        "div",
        { class: "fetch-error" },
        el("p", { class: "error", "data-prov": "api#detail" }, message),
        el("button", { class: "retry", click: retry }, "retry"),
      ),
    );
  }

  // --- datasets ---

  async function renderHome(): Promise<void> {
    const section = shell("datasets");
    const metas = await api.listDatasets();
    const base = "GET /datasets#";

    const list = el("table", { class: "datasets" });
    list.append(
      el(
        "thead",
        {},
        el("tr", {}, el("th", {}, "dataset"), el("th", {}, "rows"), el("th", {}, "target")),
      ),
    );
    const body = el("tbody");
    metas.forEach((meta, i) => {
      const target = meta.roles.target;
      body.append(
        el(
          "tr",
          {},
          el(
            "td",
            {},
            el(
              "a",
              { href: `#/dataset/${meta.dataset_id}` },
              datum(meta.dataset_id, `${base}[${i}].dataset_id`),
            ),
          ),
          el("td", {}, num(meta.fingerprint.n_rows, `${base}[${i}].fingerprint.n_rows`)),
          el("td", {}, target ? datum(target, `${base}[${i}].roles.target`) : "not set"),
        ),
      );
    });
    list.append(body);

    const csvBox = el("textarea", {
      class: "csv-input",
      placeholder: "paste CSV here, header row first",
    }) as HTMLTextAreaElement;
    const status = el("p", { class: "upload-status" });
    const uploadForm = el(
      "div",
      { class: "upload" },
      el("h3", {}, "Upload a dataset"),
      csvBox,
      el(
        "button",
        {
          class: "upload-btn",
          click: () => {
            void (async () => {
              try {
                const result = await api.uploadDataset(csvBox.value);
                location.hash = `#/dataset/${result.dataset_id}`;
              } catch (err) {
                const message = err instanceof Error ? err.message : String(err);
                clear(status).append(datum(message, "POST /datasets#detail"));
                status.classList.add("error");
              }
            })();
          },
        },
        "upload",
      ),
      status,
    );

    clear(section).append(el("h2", {}, "Datasets"), list, uploadForm);
  }

  async function renderExplorer(datasetId: string): Promise<void> {
    const section = shell("explorer");
    const summary = await api.summary(datasetId);
    createExplorer(section, summary, {
      saveRoles: (roles) => api.setRoles(datasetId, roles),
    });
  }

  // --- builder ---

  async function renderBuilder(): Promise<void> {
    const section = shell("builder");
    const datasets = await api.listDatasets();
    createBuilder(section, datasets, loadDraft(), {
      onLaunch: async (config) => {
        const accepted = await api.submitRun(config);
        location.hash = `#/run/${accepted.run_id}`;
      },
    });
  }

  // --- runs ---

  async function renderRuns(): Promise<void> {
    const section = shell("runs");
    const runs = await api.listRuns();
    const base = "GET /runs#";
    const table = el("table", { class: "runs" });
    table.append(
      el(
        "thead",
        {},
        el("tr", {}, el("th", {}, "run"), el("th", {}, "status"), el("th", {}, "progress")),
      ),
    );
    const body = el("tbody");
    runs.forEach((run, i) => {
      body.append(
        el(
          "tr",
          {},
          el(
            "td",
            {},
            el("a", { href: `#/run/${run.run_id}` }, datum(run.run_id, `${base}[${i}].run_id`)),
          ),
          el(
            "td",
            {},
            el("span", { class: `badge status-${run.status}` }, datum(run.status, `${base}[${i}].status`)),
          ),
          el(
            "td",
            {},
            num(run.progress.completed, `${base}[${i}].progress.completed`),
            " of ",
            run.progress.total !== null
              ? num(run.progress.total, `${base}[${i}].progress.total`)
              : num(run.config.cv.outer.k ?? null, `${base}[${i}].config.cv.outer.k`),
          ),
        ),
      );
    });
    table.append(body);
    clear(section).append(el("h2", {}, "Runs"), table);
  }

  async function renderRun(runId: string): Promise<void> {
    const section = shell("run");
    const dash = createDashboard(section, runId);

    const apply = async (snap: JobSnapshot) => {
      let report = null;
      let importance: Record<string, ImportanceDoc> | null = null;
      if (isTerminal(snap.status)) {
        report = await api.report(runId);
        try {
          importance = (await api.importance(runId)).importance;
        } catch {
          importance = null; // absent until computed, or never configured
        }
      }
      dash.update({ snapshot: snap, report, importance });
    };

    pollers.start(runId, (snap) => {
      void apply(snap).catch((err) => {
        renderError(section, err, () => void renderRun(runId));
      });
    });
  }

  async function route(): Promise<void> {
    pollers.stopAll();
    const hash = location.hash || "#/";
    const parts = hash.replace(/^#\//, "").split("/").filter(Boolean);
    const section = root.querySelector("main") ?? root;
    try {
      if (parts.length === 0) await renderHome();
      else if (parts[0] === "dataset" && parts[1]) await renderExplorer(parts[1]);
      else if (parts[0] === "builder") await renderBuilder();
      else if (parts[0] === "runs") await renderRuns();
      else if (parts[0] === "run" && parts[1]) await renderRun(parts[1]);
      else await renderHome();
    } catch (err) {
      renderError(section as HTMLElement, err, () => void route());
    }
  }

  return {
    route,
    pollers,
    start(): Promise<void> {
      window.addEventListener("hashchange", () => void route());
      return route();
    },
    stop(): void {
      pollers.stopAll();
    },
  };
}
