// Canned payloads captured from the service over the drought fixture.

import type { InterfaceSpec, StatePayload } from "../src/types.js";

export const DROUGHT_SPEC: InterfaceSpec = {
  version: 1,
  views: [{ id: "v_q", starting_rule: "q", view_type: "bar-chart" }],
  interactions: [
    {
      id: "i_t",
      widget_type: "dropdown",
      label: "t",
      domain: { index: { kind: "int-range", lo: 1, hi: 2 } },
      options: ["chirps", "evi"],
    },
    {
      id: "i_s_e",
      widget_type: "range-slider",
      label: "s..e",
      domain: {
        lo: { kind: "int-range", lo: 1, hi: 36 },
        hi: { kind: "int-range", lo: 1, hi: 36 },
      },
      debounce_ms: 150,
    },
  ],
  mappings: [
    { interaction: "i_t", variable: "t", attrs: { index: "index" } },
    { interaction: "i_s_e", variable: "s", attrs: { lo: "value" } },
    { interaction: "i_s_e", variable: "e", attrs: { hi: "value" } },
  ],
};

export const LIVE_END_QUERY =
  "SELECT year, sum(payout1), sum(payout2) FROM evi " +
  "WHERE dekad BETWEEN 1 AND 2 GROUP BY year ORDER BY year";

export function droughtState(): StatePayload {
  return {
    session_id: "abc123",
    grammar_id: "g1",
    spec: DROUGHT_SPEC,
    bindings: {
      t: { type: "int", value: 2, provenance: "direct" },
      s: { type: "int", value: 1, provenance: "direct" },
      e: { type: "int", value: 2, provenance: "direct" },
    },
    violations: [],
    results: {
      v_q: {
        view: "v_q",
        rule: "q",
        status: "ok",
        query: LIVE_END_QUERY,
        columns: [
          { name: "year", type: "int" },
          { name: "sum(payout1)", type: "float" },
          { name: "sum(payout2)", type: "float" },
        ],
        rows: [
          [2001, 120.5, 80.0],
          [2002, 60.0, 20.0],
          [2003, 95.0, 40.5],
        ],
        row_count: 3,
        truncated: false,
      },
    },
  };
}

export const CROSSFILTER_VIEWS = [
  { id: "v_q1_bg", starting_rule: "q1_bg", view_type: "bar-chart" },
  { id: "v_q2_bg", starting_rule: "q2_bg", view_type: "bar-chart" },
  { id: "v_q1", starting_rule: "q1", view_type: "bar-chart" },
  { id: "v_q2", starting_rule: "q2", view_type: "bar-chart" },
];
