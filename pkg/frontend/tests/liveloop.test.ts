// Live-loop contract test against payloads recorded from the real service
// over the drought fixture: dragging the range slider to (1, 2) and picking
// "evi" yields a chart backed by the exact end-state query, and rebuilding
// from GET /state reproduces the identical rendering.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { renderInterface } from "../src/render.js";
import {
  applyInteractionResponse,
  fromStatePayload,
  widgetValues,
} from "../src/state.js";
import type {
  InteractionResponse,
  StatePayload,
  ViewResult,
} from "../src/types.js";

interface Recorded {
  create_session: { session_id: string; spec: StatePayload["spec"];
                    results: Record<string, ViewResult> };
  slider_response: InteractionResponse;
  dropdown_response: InteractionResponse;
  state_after: StatePayload;
}

const recorded: Recorded = JSON.parse(
  readFileSync(new URL("./liveloop.recorded.json", import.meta.url), "utf-8"),
);

const END_QUERY =
  "SELECT year, sum(payout1), sum(payout2) FROM evi " +
  "WHERE dekad BETWEEN 1 AND 2 GROUP BY year ORDER BY year";

function sessionState() {
  const created = recorded.create_session;
  return fromStatePayload({
    session_id: created.session_id,
    grammar_id: "g1",
    spec: created.spec,
    bindings: {},
    violations: [],
    results: created.results,
  });
}

describe("live loop over the served drought fixture", () => {
  it("drag to (1,2) then pick evi: the chart is backed by the end-state query", () => {
    let state = sessionState();
    state = applyInteractionResponse(state, recorded.slider_response);
    // slider alone leaves the view incomplete, waiting on the table choice
    expect(state.results["v_q"].status).toBe("incomplete");
    expect(state.results["v_q"].unbound).toEqual(["t"]);
    state = applyInteractionResponse(state, recorded.dropdown_response);
    const view = state.results["v_q"];
    expect(view.status).toBe("ok");
    expect(view.query).toBe(END_QUERY);
    const html = renderInterface(state);
    expect(html).toContain("<svg");
    expect(html).toContain('class="bar-fg"');
    expect(html).toContain(END_QUERY.replace(/</g, "&lt;"));
  });

  it("widgets mirror the bindings after the two interactions", () => {
    let state = sessionState();
    state = applyInteractionResponse(state, recorded.slider_response);
    state = applyInteractionResponse(state, recorded.dropdown_response);
    const values = widgetValues(state);
    expect(values["i_t"]).toEqual({ index: 2 });
    expect(values["i_s_e"]).toEqual({ lo: 1, hi: 2 });
  });

  it("reloading from GET /state reproduces the identical rendering", () => {
    let driven = sessionState();
    driven = applyInteractionResponse(driven, recorded.slider_response);
    driven = applyInteractionResponse(driven, recorded.dropdown_response);
    const reloaded = fromStatePayload(recorded.state_after);
    expect(renderInterface(reloaded)).toBe(renderInterface(driven));
    expect(widgetValues(reloaded)).toEqual(widgetValues(driven));
  });

  it("the recorded spec is the versioned contract shape", () => {
    const spec = recorded.create_session.spec;
    expect(spec.version).toBe(1);
    expect(spec.views).toHaveLength(1);
    expect(spec.interactions.map((i) => i.widget_type)).toEqual([
      "dropdown",
      "range-slider",
    ]);
  });
});
