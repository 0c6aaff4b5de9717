/** Dataset explorer: sortable column table plus a per-column detail
 * panel with distribution bars, an outlier-threshold slider, and role
 * editing. Every rendered value is tagged with the summary field it
 * came from; bar heights are geometry, the numbers live in tags.
 */

import { clear, datum, el, fmtNumber, num } from "../dom.js";
import type { ColumnSummary, DatasetMeta, DatasetSummary, Role, RolesDoc } from "../types.js";

export interface ExplorerHooks {
  saveRoles(roles: RolesDoc): Promise<DatasetMeta>;
}

type SortKey = "name" | "dtype" | "role" | "missing";

interface ExplorerState {
  sort: SortKey;
  ascending: boolean;
  selected: string | null;
  roleEdits: Map<string, Role>;
  saveError: string | null;
  savedRoles: Partial<RolesDoc> | null;
}

function sortColumns(columns: ColumnSummary[], key: SortKey, ascending: boolean): ColumnSummary[] {
  const out = [...columns];
  out.sort((a, b) => {
    let cmp: number;
    if (key === "missing") cmp = a.n_missing - b.n_missing;
    else cmp = a[key] < b[key] ? -1 : a[key] > b[key] ? 1 : 0;
    return ascending ? cmp : -cmp;
  });
  return out;
}

export function createExplorer(root: HTMLElement, summary: DatasetSummary, hooks: ExplorerHooks) {
  const state: ExplorerState = {
    sort: "name",
    ascending: true,
    selected: null,
    roleEdits: new Map(),
    saveError: null,
    savedRoles: null,
  };
  const base = `GET /datasets/${summary.dataset_id}/summary#`;
  const indexOf = new Map(summary.columns.map((c, i) => [c.name, i]));

  function currentRole(col: ColumnSummary): Role {
    return state.roleEdits.get(col.name) ?? col.role;
  }

  function rolesDoc(): RolesDoc {
    let target: string | null = null;
    const nonInput: string[] = [];
    for (const col of summary.columns) {
      const role = currentRole(col);
      if (role === "target") target = col.name;
      else if (role === "non-input") nonInput.push(col.name);
    }
    return { target, non_input: nonInput };
  }

  function setRole(name: string, role: Role): void {
    if (role === "target") {
      // only one target: demote any other edited or original target
      for (const col of summary.columns) {
        if (col.name !== name && currentRole(col) === "target") {
          state.roleEdits.set(col.name, "input-feature");
        }
      }
    }
    state.roleEdits.set(name, role);
    render();
  }

  async function save(): Promise<void> {
    state.saveError = null;
    try {
      const meta = await hooks.saveRoles(rolesDoc());
      state.savedRoles = meta.roles;
      state.roleEdits.clear();
      // reflect the server's view of the roles in the table
      for (const col of summary.columns) {
        if (meta.roles.target === col.name) col.role = "target";
        else if ((meta.roles.non_input ?? []).includes(col.name)) col.role = "non-input";
        else col.role = "input-feature";
      }
    } catch (err) {
      state.saveError = err instanceof Error ? err.message : String(err);
    }
    render();
  }

  function header(label: string, key: SortKey): HTMLElement {
    const marker = state.sort === key ? (state.ascending ? " ▲" : " ▼") : "";
    return el(
      "th",
      {
        class: "sortable",
        click: () => {
          if (state.sort === key) state.ascending = !state.ascending;
          else [state.sort, state.ascending] = [key, true];
          render();
        },
      },
      label + marker,
    );
  }

  function roleBadge(col: ColumnSummary): HTMLElement {
    const i = indexOf.get(col.name);
    const badge = datum(col.role, `${base}columns[${i}].role`);
    badge.classList.add("badge", `role-${col.role}`);
    return badge;
  }

  function tableRow(col: ColumnSummary): HTMLElement {
    const i = indexOf.get(col.name);
    const missing = el(
      "span",
      { "data-prov": `derived:${base}columns[${i}].n_missing,${base}n_rows` },
      summary.n_rows ? `${fmtNumber((100 * col.n_missing) / summary.n_rows, 3)}%` : "n/a",
    );
    const row = el(
      "tr",
      {
        class: state.selected === col.name ? "selected" : "",
        click: () => {
          state.selected = col.name;
          render();
        },
      },
      el("td", {}, datum(col.name, `${base}columns[${i}].name`)),
      el("td", {}, datum(col.dtype, `${base}columns[${i}].dtype`)),
      el("td", {}, roleBadge(col)),
      el("td", {}, missing),
    );
    return row;
  }

  function statCell(label: string, value: number | null, field: string, i: number): HTMLElement {
    return el(
      "div",
      { class: "stat" },
      el("span", { class: "stat-label" }, label),
      num(value, `${base}columns[${i}].${field}`),
    );
  }

  function distributionPanel(col: ColumnSummary, i: number): HTMLElement {
    const panel = el("div", { class: "distribution" });
    if (col.histogram) {
      const max = Math.max(...col.histogram.counts, 1);
      const bars = el("div", { class: "bars" });
      col.histogram.counts.forEach((count, j) => {
        bars.append(
          el("div", {
            class: "bar",
            style: `height:${Math.round((100 * count) / max)}%`,
            title: `${count}`,
            "data-prov": `${base}columns[${i}].histogram.counts[${j}]`,
          }),
        );
      });
      panel.append(bars);
    } else if (col.level_counts) {
      const entries = Object.entries(col.level_counts);
      const max = Math.max(...entries.map(([, c]) => c), 1);
      for (const [level, count] of entries) {
        panel.append(
          el(
            "div",
            { class: "level-row" },
            datum(level, `${base}columns[${i}].level_counts`),
            el("div", {
              class: "bar-h",
              style: `width:${Math.round((100 * count) / max)}%`,
            }),
            num(count, `${base}columns[${i}].level_counts.${level}`),
          ),
        );
      }
    } else {
      panel.append(el("p", { class: "muted" }, "no distribution available"));
    }
    return panel;
  }

  function outlierPanel(col: ColumnSummary, i: number): HTMLElement | null {
    const grid = col.outliers;
    if (!grid) return null;
    const panel = el("div", { class: "outliers" });
    const readout = el("span", { class: "readout" });
    const describe = (idx: number) => {
      clear(readout).append(
        "flags ",
        num(grid.counts[idx], `${base}columns[${i}].outliers.counts[${idx}]`),
        " rows beyond ",
        num(grid.k[idx], `${base}columns[${i}].outliers.k[${idx}]`),
        " standard deviations",
      );
    };
    const start = grid.k.length - 1;
    const slider = el("input", {
      type: "range",
      min: "0",
      max: String(grid.k.length - 1),
      step: "1",
      value: String(start),
      class: "threshold",
      input: (ev: Event) => describe(Number((ev.target as HTMLInputElement).value)),
    });
    describe(start);
    panel.append(el("h4", {}, "Outlier threshold"), slider, readout);
    return panel;
  }

  function detail(): HTMLElement {
    const col = summary.columns.find((c) => c.name === state.selected);
    if (!col) return el("div", { class: "detail muted" }, "select a column to inspect it");
    const i = indexOf.get(col.name)!;

    const roleSelect = el("select", {
      class: "role-select",
      change: (ev: Event) => setRole(col.name, (ev.target as HTMLSelectElement).value as Role),
    });
    for (const role of ["input-feature", "target", "non-input"] as Role[]) {
      const opt = el("option", { value: role }, role);
      if (currentRole(col) === role) opt.setAttribute("selected", "");
      roleSelect.append(opt);
    }

    const dirty = state.roleEdits.size > 0;
    const saveRow = el(
      "div",
      { class: "save-row" },
      roleSelect,
      el("button", { class: "save-roles", click: () => void save(), disabled: !dirty }, "Save roles"),
    );
    if (state.saveError) {
      saveRow.append(
        el(
          "span",
          { class: "error inline" },
          state.saveError,
          el("button", { class: "retry", click: () => void save() }, "Retry"),
        ),
      );
    }

    const stats = el(
      "div",
      { class: "stats" },
      statCell("observed", col.n, "n", i),
      statCell("missing", col.n_missing, "n_missing", i),
      statCell("unique", col.n_unique, "n_unique", i),
      statCell("mean", col.mean, "mean", i),
      statCell("std", col.std, "std", i),
      statCell("min", col.min, "min", i),
      statCell("max", col.max, "max", i),
      statCell("lower quartile", col.q25, "q25", i),
      statCell("median", col.q50, "q50", i),
      statCell("upper quartile", col.q75, "q75", i),
    );

    const parts = el(
      "div",
      { class: "detail" },
      el("h3", {}, datum(col.name, `${base}columns[${i}].name`)),
      saveRow,
      stats,
      distributionPanel(col, i),
    );
    const outliers = outlierPanel(col, i);
    if (outliers) parts.append(outliers);
    return parts;
  }

  function render(): void {
    const tbody = el("tbody");
    for (const col of sortColumns(summary.columns, state.sort, state.ascending)) {
      tbody.append(tableRow(col));
    }
    clear(root).append(
      el(
        "div",
        { class: "explorer" },
        el(
          "table",
          { class: "columns" },
          el(
            "thead",
            {},
            el(
              "tr",
              {},
              header("column", "name"),
              header("dtype", "dtype"),
              header("role", "role"),
              header("missing", "missing"),
            ),
          ),
          tbody,
        ),
        detail(),
      ),
    );
  }

  render();
  return { rolesDoc };
}
