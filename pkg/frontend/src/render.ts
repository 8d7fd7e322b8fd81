// HTML renderers: pure string builders from client state, one widget per
// interaction declaration and one panel per view (background twins fold
// into their overlay view's panel).  Event wiring happens in app.ts through
// the data-widget/data-attr attributes emitted here.

import { barChartSVG, lineChartSVG, pairViews, seriesFromResult } from "./charts.js";
import type { ClientState } from "./state.js";
import { violationsByWidget, widgetValues } from "./state.js";
import type { AttrDomain, InteractionDecl, ViewResult, Violation } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const KNOWN_WIDGETS = new Set([
  "dropdown", "radio", "slider", "range-slider", "text-input",
  "checkbox", "button-add-instance", "date-picker",
]);

function attrInput(
  interaction: InteractionDecl,
  attr: string,
  domain: AttrDomain,
  value: unknown,
): string {
  const common = `data-widget="${interaction.id}" data-attr="${attr}"`;
  switch (domain.kind) {
    case "int-range":
    case "num-range": {
      const val = value === undefined ? "" : `value="${value}"`;
      return (
        `<input type="range" min="${domain.lo}" max="${domain.hi}" ` +
        `step="${domain.kind === "int-range" ? 1 : "any"}" ${val} ${common}>` +
        `<output>${value ?? ""}</output>`
      );
    }
    case "enum": {
      const options = domain.values
        .map(
          (v) =>
            `<option value="${escapeHtml(v)}"${String(value) === v ? " selected" : ""}>` +
            `${escapeHtml(v)}</option>`,
        )
        .join("");
      const blank = value === undefined ? `<option value="" selected></option>` : "";
      return `<select ${common}>${blank}${options}</select>`;
    }
    case "date": {
      const val = value === undefined ? "" : `value="${value}"`;
      return `<input type="date" ${val} ${common}>`;
    }
    case "count":
      return (
        `<button type="button" class="add" ${common} data-count="${value ?? 0}">` +
        `add (${value ?? 0})</button>`
      );
    case "text":
    default: {
      const val = value === undefined ? "" : `value="${escapeHtml(String(value))}"`;
      return `<input type="text" ${val} ${common}>`;
    }
  }
}

export function renderWidget(
  interaction: InteractionDecl,
  values: Record<string, unknown>,
  violations: Violation[],
): string {
  const id = interaction.id;
  const label = escapeHtml(interaction.label || id);
  const unknown = !KNOWN_WIDGETS.has(interaction.widget_type);
  const badge = unknown
    ? `<span class="badge warn" title="unsupported widget type ` +
      `${escapeHtml(interaction.widget_type)}">?</span>`
    : "";
  let control = "";
  switch (unknown ? "text-input" : interaction.widget_type) {
    case "dropdown": {
      const options = interaction.options ?? [];
      if (options.length > 0 && interaction.domain["index"]) {
        const current = values["index"];
        const items = options
          .map(
            (o, i) =>
              `<option value="${i + 1}"${current === i + 1 ? " selected" : ""}>` +
              `${escapeHtml(o)}</option>`,
          )
          .join("");
        const blank = current === undefined ? `<option value="" selected></option>` : "";
        control = `<select data-widget="${id}" data-attr="index">${blank}${items}</select>`;
      } else {
        control = Object.entries(interaction.domain)
          .map(([attr, domain]) => attrInput(interaction, attr, domain, values[attr]))
          .join(" ");
      }
      break;
    }
    case "radio": {
      const options = interaction.options ?? [];
      const current = values["index"];
      control = options
        .map(
          (o, i) =>
            `<label class="radio"><input type="radio" name="${id}" value="${i + 1}"` +
            `${current === i + 1 ? " checked" : ""} data-widget="${id}" ` +
            `data-attr="index"> ${escapeHtml(o)}</label>`,
        )
        .join("");
      break;
    }
    case "slider":
      control = attrInput(interaction, "value", interaction.domain["value"],
                          values["value"]);
      break;
    case "range-slider": {
      const lo = attrInput(interaction, "lo", interaction.domain["lo"], values["lo"]);
      const hi = attrInput(interaction, "hi", interaction.domain["hi"], values["hi"]);
      control = `<div class="range-pair">${lo}${hi}</div>`;
      break;
    }
    case "date-picker": {
      const domain = interaction.domain["value"];
      control =
        domain.kind === "enum"
          ? attrInput(interaction, "value", domain, values["value"])
          : attrInput(interaction, "value", { kind: "date" }, values["value"]);
      break;
    }
    case "checkbox": {
      const checked = values["checked"] ? " checked" : "";
      control = `<input type="checkbox"${checked} data-widget="${id}" data-attr="checked">`;
      break;
    }
    case "button-add-instance": {
      const domain = interaction.domain["count"] ?? { kind: "count", cap: 8 };
      control = attrInput(interaction, "count", domain, values["count"]);
      if (interaction.spawn_rule) {
        control += `<div class="nest" data-nest-for="${id}"></div>`;
      }
      break;
    }
    case "text-input": {
      const val = values["text"] ?? values["value"] ?? "";
      control =
        `<input type="text" class="wide" value="${escapeHtml(String(val))}" ` +
        `data-widget="${id}" data-attr="text" ` +
        (interaction.target_rule
          ? `data-target-rule="${escapeHtml(interaction.target_rule)}" `
          : "") +
        `placeholder="${interaction.target_rule ?? ""}">`;
      break;
    }
  }
  const notes = violations
    .map((v) => `<div class="violation">${escapeHtml(v.message)}</div>`)
    .join("");
  const errors = `<div class="error-slot" data-error-for="${id}"></div>`;
  return (
    `<div class="widget" data-widget-box="${id}">` +
    `<label class="widget-label">${label}${badge}</label>` +
    `<div class="widget-control">${control}</div>${notes}${errors}</div>`
  );
}

export function renderResultTable(result: ViewResult): string {
  const columns = result.columns ?? [];
  const rows = result.rows ?? [];
  const head = columns.map((c) => `<th>${escapeHtml(c.name)}</th>`).join("");
  const body = rows
    .map(
      (r) =>
        `<tr>${r.map((v) => `<td>${escapeHtml(String(v ?? ""))}</td>`).join("")}</tr>`,
    )
    .join("");
  const more = result.truncated
    ? `<div class="truncated">showing ${rows.length} of ${result.row_count} rows</div>`
    : "";
  return `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>${more}`;
}

function renderResultBody(
  viewType: string,
  result: ViewResult | undefined,
  bgResult?: ViewResult,
): string {
  if (!result) {
    return `<div class="empty">no results yet</div>`;
  }
  if (result.status === "incomplete") {
    const missing = (result.unbound ?? []).map(escapeHtml).join(", ");
    const violations = (result.violations ?? [])
      .map((v) => `<div class="violation">${escapeHtml(v.message)}</div>`)
      .join("");
    const hint = missing ? `<div class="empty">waiting for: ${missing}</div>` : "";
    return violations + hint;
  }
  if (result.status === "error") {
    return `<div class="violation">${escapeHtml(result.error ?? "query failed")}</div>`;
  }
  if (viewType === "bar-chart" || viewType === "line-chart") {
    const fg = seriesFromResult(result);
    const bg = bgResult ? seriesFromResult(bgResult) : null;
    if (fg || bg) {
      const svg = viewType === "bar-chart" ? barChartSVG(fg, bg) : lineChartSVG(fg, bg);
      return svg;
    }
  }
  if (viewType === "text") {
    const rows = result.rows ?? [];
    return `<p class="text-view">${escapeHtml(rows.map(String).join("\n"))}</p>`;
  }
  return renderResultTable(result);
}

export function renderPanels(state: ClientState): string {
  const pairs = pairViews(state.spec.views);
  const out: string[] = [];
  for (const { main, bg } of pairs) {
    const result = state.results[main.id];
    const bgResult = bg ? state.results[bg.id] : undefined;
    const stale = state.stale.includes(main.id) ? " stale" : "";
    const query = result?.query
      ? `<code class="query">${escapeHtml(result.query)}</code>`
      : "";
    out.push(
      `<section class="panel${stale}" data-panel="${main.id}" ` +
        `data-rule="${escapeHtml(main.starting_rule)}">` +
        `<h3>${escapeHtml(main.starting_rule)}</h3>` +
        renderResultBody(main.view_type, result, bgResult) +
        query +
        `</section>`,
    );
  }
  return out.join("");
}

export function renderWidgets(state: ClientState): string {
  const values = widgetValues(state);
  const violations = violationsByWidget(state);
  return state.spec.interactions
    .map((i) => renderWidget(i, values[i.id] ?? {}, violations[i.id] ?? []))
    .join("");
}

export function renderInterface(state: ClientState): string {
  return (
    `<div class="layout">` +
    `<aside class="widgets">${renderWidgets(state)}</aside>` +
    `<main class="panels">${renderPanels(state)}</main>` +
    `</div>`
  );
}
