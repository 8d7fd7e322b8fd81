import { describe, expect, it } from "vitest";

import { barChartSVG, pairViews, seriesFromResult } from "../src/charts.js";
import { CROSSFILTER_VIEWS } from "./fixtures.js";
import type { ViewResult } from "../src/types.js";

const RESULT: ViewResult = {
  view: "v", rule: "q", status: "ok",
  columns: [{ name: "arrival", type: "int" }, { name: "count()", type: "int" }],
  rows: [[7, 12], [8, 30], [9, 5]],
};

describe("seriesFromResult", () => {
  it("uses the first column as categories and the first numeric as values", () => {
    const series = seriesFromResult(RESULT);
    expect(series).toEqual({ categories: ["7", "8", "9"], values: [12, 30, 5] });
  });

  it("returns null without rows or numeric columns", () => {
    expect(seriesFromResult({ view: "v", rule: "q", rows: [], columns: [] })).toBeNull();
    expect(
      seriesFromResult({
        view: "v", rule: "q",
        columns: [{ name: "a", type: "str" }, { name: "b", type: "str" }],
        rows: [["x", "y"]],
      }),
    ).toBeNull();
  });
});

describe("pairViews", () => {
  it("folds _bg views into their overlay twin", () => {
    const pairs = pairViews(CROSSFILTER_VIEWS);
    expect(pairs).toHaveLength(2);
    expect(pairs[0].main.starting_rule).toBe("q1");
    expect(pairs[0].bg?.starting_rule).toBe("q1_bg");
    expect(pairs[1].main.starting_rule).toBe("q2");
  });

  it("keeps an orphan _bg view when no twin exists", () => {
    const pairs = pairViews([
      { id: "v_only_bg", starting_rule: "only_bg", view_type: "bar-chart" },
    ]);
    expect(pairs).toHaveLength(1);
    expect(pairs[0].main.starting_rule).toBe("only_bg");
  });

  it("passes plain views through untouched", () => {
    const pairs = pairViews([{ id: "v_q", starting_rule: "q", view_type: "table" }]);
    expect(pairs).toEqual([{ main: { id: "v_q", starting_rule: "q",
                                     view_type: "table" } }]);
  });
});

describe("barChartSVG", () => {
  it("renders one foreground bar per category", () => {
    const svg = barChartSVG(seriesFromResult(RESULT));
    expect(svg.match(/class="bar-fg"/g)).toHaveLength(3);
    expect(svg).toContain("<svg");
  });

  it("layers gray background bars behind the overlay", () => {
    const bg = { categories: ["7", "8", "9"], values: [40, 50, 20] };
    const fg = { categories: ["7", "8"], values: [12, 30] };
    const svg = barChartSVG(fg, bg);
    const bgAt = svg.indexOf('class="bar-bg"');
    const fgAt = svg.indexOf('class="bar-fg"');
    expect(bgAt).toBeGreaterThan(-1);
    expect(fgAt).toBeGreaterThan(bgAt); // background renders first, underneath
    expect(svg.match(/class="bar-bg"/g)).toHaveLength(3);
    expect(svg.match(/class="bar-fg"/g)).toHaveLength(2);
  });

  it("scales bars against the joint maximum", () => {
    const bg = { categories: ["a"], values: [100] };
    const fg = { categories: ["a"], values: [50] };
    const svg = barChartSVG(fg, bg);
    const heights = [...svg.matchAll(/height="([\d.]+)"/g)].map((m) => Number(m[1]));
    expect(heights[0]).toBeGreaterThan(heights[1] * 1.9);
  });
});
