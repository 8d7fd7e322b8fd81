// Chart rendering as pure SVG-string builders.  A bar chart can carry a
// gray background series behind the colored foreground bars: the
// cross-filter pattern, paired through the `<rule>_bg` naming convention.

import type { ViewDecl, ViewResult } from "./types.js";

export interface Series {
  categories: string[];
  values: number[];
}

export interface ViewPair {
  main: ViewDecl;
  bg?: ViewDecl;
}

/** Pair overlay views with their background twins (q1 with q1_bg). */
export function pairViews(views: ViewDecl[]): ViewPair[] {
  const byRule = new Map(views.map((v) => [v.starting_rule, v]));
  const pairs: ViewPair[] = [];
  const used = new Set<string>();
  for (const view of views) {
    if (used.has(view.id)) continue;
    if (view.starting_rule.endsWith("_bg")) {
      const mainRule = view.starting_rule.slice(0, -3);
      const main = byRule.get(mainRule);
      if (main !== undefined) continue; // folded into the main view below
      pairs.push({ main: view });
      used.add(view.id);
      continue;
    }
    const bg = byRule.get(view.starting_rule + "_bg");
    pairs.push(bg ? { main: view, bg } : { main: view });
    used.add(view.id);
    if (bg) used.add(bg.id);
  }
  return pairs;
}

/** First column as categories, first numeric column as values. */
export function seriesFromResult(result: ViewResult): Series | null {
  const rows = result.rows ?? [];
  const columns = result.columns ?? [];
  if (rows.length === 0 || columns.length < 2) return null;
  let valueAt = -1;
  for (let c = 1; c < columns.length; c++) {
    if (rows.every((r) => typeof r[c] === "number" || r[c] === null)) {
      valueAt = c;
      break;
    }
  }
  if (valueAt < 0) return null;
  return {
    categories: rows.map((r) => String(r[0])),
    values: rows.map((r) => Number(r[valueAt] ?? 0)),
  };
}

const WIDTH = 420;
const HEIGHT = 200;
const PAD = { left: 42, right: 8, top: 10, bottom: 38 };

function scaleMax(values: number[]): number {
  const top = Math.max(0, ...values);
  return top <= 0 ? 1 : top;
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Bar chart; `bg` renders first in gray, full category width. */
export function barChartSVG(fg: Series | null, bg: Series | null = null): string {
  const categories = (bg ?? fg)?.categories ?? [];
  const innerW = WIDTH - PAD.left - PAD.right;
  const innerH = HEIGHT - PAD.top - PAD.bottom;
  const max = scaleMax([...(fg?.values ?? []), ...(bg?.values ?? [])]);
  const slot = categories.length > 0 ? innerW / categories.length : innerW;
  const parts: string[] = [
    `<svg class="chart" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img">`,
    `<line x1="${PAD.left}" y1="${HEIGHT - PAD.bottom}" x2="${WIDTH - PAD.right}" ` +
      `y2="${HEIGHT - PAD.bottom}" stroke="#999"/>`,
  ];
  const indexOf = new Map(categories.map((c, i) => [c, i]));
  const bar = (series: Series, cls: string, inset: number) => {
    for (let i = 0; i < series.categories.length; i++) {
      const slotAt = indexOf.get(series.categories[i]);
      if (slotAt === undefined) continue;
      const h = (series.values[i] / max) * innerH;
      const x = PAD.left + slotAt * slot + inset;
      const w = Math.max(1, slot - 2 * inset - 1);
      const y = HEIGHT - PAD.bottom - h;
      parts.push(
        `<rect class="${cls}" x="${x.toFixed(1)}" y="${y.toFixed(1)}" ` +
          `width="${w.toFixed(1)}" height="${h.toFixed(1)}"/>`,
      );
    }
  };
  if (bg) bar(bg, "bar-bg", 0.5);
  if (fg) bar(fg, "bar-fg", bg ? slot * 0.18 : 0.5);
  const step = Math.max(1, Math.ceil(categories.length / 12));
  for (let i = 0; i < categories.length; i += step) {
    const x = PAD.left + (i + 0.5) * slot;
    parts.push(
      `<text class="tick" x="${x.toFixed(1)}" y="${HEIGHT - PAD.bottom + 14}" ` +
        `text-anchor="middle">${esc(categories[i])}</text>`,
    );
  }
  parts.push(
    `<text class="tick" x="${PAD.left - 6}" y="${PAD.top + 8}" ` +
      `text-anchor="end">${max}</text>`,
  );
  parts.push("</svg>");
  return parts.join("");
}

export function lineChartSVG(fg: Series | null, bg: Series | null = null): string {
  const categories = (bg ?? fg)?.categories ?? [];
  const innerW = WIDTH - PAD.left - PAD.right;
  const innerH = HEIGHT - PAD.top - PAD.bottom;
  const max = scaleMax([...(fg?.values ?? []), ...(bg?.values ?? [])]);
  const stepX = categories.length > 1 ? innerW / (categories.length - 1) : 0;
  const path = (series: Series): string =>
    series.values
      .map((v, i) => {
        const x = PAD.left + i * stepX;
        const y = HEIGHT - PAD.bottom - (v / max) * innerH;
        return `${i === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`;
      })
      .join(" ");
  const parts = [
    `<svg class="chart" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img">`,
    `<line x1="${PAD.left}" y1="${HEIGHT - PAD.bottom}" x2="${WIDTH - PAD.right}" ` +
      `y2="${HEIGHT - PAD.bottom}" stroke="#999"/>`,
  ];
  if (bg) parts.push(`<path class="line-bg" d="${path(bg)}" fill="none"/>`);
  if (fg) parts.push(`<path class="line-fg" d="${path(fg)}" fill="none"/>`);
  parts.push("</svg>");
  return parts.join("");
}
