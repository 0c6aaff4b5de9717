import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { fmtNumber } from "../src/dom.js";
import type { DatasetMeta, DatasetSummary } from "../src/types.js";
import { createExplorer } from "../src/views/explorer.js";
import { FakeServer, fixture, freshRoot, provenanceViolations, sleep } from "./helpers.js";

const noHooks = { saveRoles: () => Promise.reject(new Error("not under test")) };

function summary(): DatasetSummary {
  return fixture("summary_small.json").body as DatasetSummary;
}

function clickRow(name: string): void {
  const row = [...document.querySelectorAll("table.columns tbody tr")].find(
    (r) => r.querySelector("td")?.textContent === name,
  );
  expect(row, `no row for column ${name}`).toBeDefined();
  row!.dispatchEvent(new Event("click"));
}

describe("dataset explorer", () => {
  it("renders one row per column with dtype, role, and missing share", () => {
    const s = summary();
    createExplorer(freshRoot(), s, noHooks);
    const rows = document.querySelectorAll("table.columns tbody tr");
    expect(rows).toHaveLength(s.columns.length);
    const text = document.body.textContent!;
    for (const col of s.columns) {
      expect(text).toContain(col.name);
      expect(text).toContain(col.dtype);
    }
    // v has 2 of 20 rows missing
    const vCol = s.columns.find((c) => c.name === "v")!;
    expect(text).toContain(`${fmtNumber((100 * vCol.n_missing) / s.n_rows, 3)}%`);
  });

  it("draws exactly the fixture's histogram bars for a continuous column", () => {
    const s = summary();
    createExplorer(freshRoot(), s, noHooks);
    clickRow("v");
    const hist = s.columns.find((c) => c.name === "v")!.histogram!;
    const bars = document.querySelectorAll(".distribution .bars .bar");
    expect(bars).toHaveLength(hist.counts.length);
    expect(bars[0].getAttribute("data-prov")).toContain("histogram.counts[0]");
    // stats panel carries the summary numbers
    const vCol = s.columns.find((c) => c.name === "v")!;
    expect(document.querySelector(".stats")!.textContent).toContain(fmtNumber(vCol.mean, 4));
  });

  it("draws one level row per category with the fixture counts", () => {
    const s = summary();
    createExplorer(freshRoot(), s, noHooks);
    clickRow("c");
    const levels = s.columns.find((c) => c.name === "c")!.level_counts!;
    const rows = document.querySelectorAll(".level-row");
    expect(rows).toHaveLength(Object.keys(levels).length);
    for (const [level, count] of Object.entries(levels)) {
      const row = [...rows].find((r) => r.textContent!.startsWith(level));
      expect(row, `no bar for level ${level}`).toBeDefined();
      expect(row!.textContent).toContain(String(count));
    }
  });

  it("reads the outlier slider readout straight off the fixture grid", () => {
    const s = summary();
    createExplorer(freshRoot(), s, noHooks);
    clickRow("v");
    const grid = s.columns.find((c) => c.name === "v")!.outliers!;
    const last = grid.k.length - 1;

    const readout = document.querySelector(".outliers .readout")!;
    expect(readout.textContent).toContain(`flags ${fmtNumber(grid.counts[last], 4)} rows`);
    expect(readout.textContent).toContain(`beyond ${fmtNumber(grid.k[last], 4)} standard`);

    const slider = document.querySelector<HTMLInputElement>(".outliers input.threshold")!;
    slider.value = "0";
    slider.dispatchEvent(new Event("input"));
    expect(readout.textContent).toContain(`flags ${fmtNumber(grid.counts[0], 4)} rows`);
    expect(readout.textContent).toContain(`beyond ${fmtNumber(grid.k[0], 4)} standard`);
    expect(readout.querySelector('[data-prov$="outliers.counts[0]"]')).not.toBeNull();
  });

  it("sorts by the clicked header and flips direction on a second click", () => {
    createExplorer(freshRoot(), summary(), noHooks);
    const firstName = () =>
      document.querySelector("table.columns tbody tr td")!.textContent;
    expect(firstName()).toBe("c"); // name ascending by default

    const missingHeader = [...document.querySelectorAll("th.sortable")].find((h) =>
      h.textContent!.startsWith("missing"),
    )!;
    missingHeader.dispatchEvent(new Event("click"));
    const rows = [...document.querySelectorAll("table.columns tbody tr")];
    expect(rows[rows.length - 1].querySelector("td")!.textContent).toBe("v");

    // same header again: most-missing first
    [...document.querySelectorAll("th.sortable")]
      .find((h) => h.textContent!.startsWith("missing"))!
      .dispatchEvent(new Event("click"));
    expect(firstName()).toBe("v");
  });

  it("saves edited roles and reflects the server's response", async () => {
    const server = new FakeServer().serve(fixture("roles_small_ok.json"));
    const api = new ApiClient("", server.fetch);
    const s = summary();
    const explorer = createExplorer(freshRoot(), s, {
      saveRoles: (roles) => api.setRoles(s.dataset_id, roles),
    });

    clickRow("c");
    const select = document.querySelector<HTMLSelectElement>("select.role-select")!;
    select.value = "non-input";
    select.dispatchEvent(new Event("change"));
    expect(explorer.rolesDoc()).toEqual({ target: "y", non_input: ["c"] });

    const save = document.querySelector<HTMLButtonElement>("button.save-roles")!;
    expect(save.disabled).toBe(false);
    save.click();
    await sleep(0);

    expect(server.requests).toHaveLength(1);
    expect(server.requests[0].method).toBe("POST");
    expect(JSON.parse(server.requests[0].body!)).toEqual({ target: "y", non_input: ["c"] });

    // the table now shows whatever the response meta says the roles are
    const meta = fixture("roles_small_ok.json").body as DatasetMeta;
    const cRow = [...document.querySelectorAll("table.columns tbody tr")].find(
      (r) => r.querySelector("td")!.textContent === "c",
    )!;
    const expected = meta.roles.non_input?.includes("c") ? "non-input" : "input-feature";
    expect(cRow.textContent).toContain(expected);
  });

  it("shows an inline error with a retry button when saving fails", async () => {
    const server = new FakeServer().serve(fixture("roles_small_bad.json"));
    const api = new ApiClient("", server.fetch);
    const s = summary();
    createExplorer(freshRoot(), s, {
      saveRoles: (roles) => api.setRoles(s.dataset_id, roles),
    });

    clickRow("v");
    const select = document.querySelector<HTMLSelectElement>("select.role-select")!;
    select.value = "non-input";
    select.dispatchEvent(new Event("change"));
    document.querySelector<HTMLButtonElement>("button.save-roles")!.click();
    await sleep(0);

    const error = document.querySelector(".save-row .error")!;
    expect(error.textContent).toContain("unknown target column");
    expect(error.querySelector("button.retry")).not.toBeNull();
    // the edit survives, so the save button stays armed
    expect(document.querySelector<HTMLButtonElement>("button.save-roles")!.disabled).toBe(false);
  });

  it("tags every number on screen with its API provenance", () => {
    const root = freshRoot();
    createExplorer(root, summary(), noHooks);
    clickRow("v");
    expect(provenanceViolations(root)).toEqual([]);
    clickRow("c");
    expect(provenanceViolations(root)).toEqual([]);
  });
});
