// Client-side session state as a pure value: everything the page renders is
// a function of the last server payloads plus in-flight widget edits, so a
// reload followed by GET /state reproduces the identical rendering.

import type {
  BoundValue,
  InteractionDecl,
  InteractionResponse,
  InterfaceSpec,
  StatePayload,
  ViewResult,
  Violation,
} from "./types.js";

export interface ClientState {
  sessionId: string;
  spec: InterfaceSpec;
  bindings: Record<string, BoundValue>;
  violations: Violation[];
  results: Record<string, ViewResult>;
  stale: string[]; // view ids with a refresh in flight or a failed request
}

export function fromStatePayload(payload: StatePayload): ClientState {
  return {
    sessionId: payload.session_id,
    spec: payload.spec,
    bindings: { ...payload.bindings },
    violations: [...payload.violations],
    results: { ...payload.results },
    stale: [],
  };
}

export function applyInteractionResponse(
  state: ClientState,
  response: InteractionResponse,
): ClientState {
  const bindings = { ...state.bindings };
  for (const [name, value] of Object.entries(response.bound)) {
    bindings[name] = { ...value, provenance: "direct" };
  }
  for (const name of response.propagated) {
    const source = Object.keys(response.bound)[0];
    const from = response.bound[source];
    if (from !== undefined) {
      bindings[name] = { ...from, provenance: "propagated" };
    }
  }
  for (const name of response.removed ?? []) {
    delete bindings[name];
  }
  const results = { ...state.results, ...response.results };
  const refreshed = new Set(Object.keys(response.results));
  return {
    ...state,
    bindings,
    violations: [...response.violations],
    results,
    stale: state.stale.filter((id) => !refreshed.has(id)),
  };
}

export function markStale(state: ClientState, viewIds: string[]): ClientState {
  const stale = new Set([...state.stale, ...viewIds]);
  return { ...state, stale: [...stale] };
}

export function mappingsFor(spec: InterfaceSpec, interactionId: string) {
  return spec.mappings.filter((m) => m.interaction === interactionId);
}

/** Widget display values derived from the bindings through the mappings:
 * the inverse direction of submitting a payload. */
export function widgetValues(state: ClientState): Record<string, Record<string, unknown>> {
  const out: Record<string, Record<string, unknown>> = {};
  for (const interaction of state.spec.interactions) {
    const values: Record<string, unknown> = {};
    for (const mapping of mappingsFor(state.spec, interaction.id)) {
      const bound = state.bindings[mapping.variable];
      if (bound === undefined) continue;
      for (const [iAttr, cAttr] of Object.entries(mapping.attrs)) {
        if (cAttr === "index" || cAttr === "count" || cAttr === "value") {
          values[iAttr] = bound.value;
        } else {
          // row-valued domains: one interaction attribute per column
          const row = bound.value;
          if (Array.isArray(row)) {
            const columns = Object.values(mapping.attrs);
            const at = columns.indexOf(cAttr);
            if (at >= 0) values[iAttr] = row[at];
          }
        }
      }
    }
    out[interaction.id] = values;
  }
  return out;
}

/** Violations shown inline next to each widget that maps an involved
 * variable. */
export function violationsByWidget(state: ClientState): Record<string, Violation[]> {
  const out: Record<string, Violation[]> = {};
  for (const violation of state.violations) {
    const involved = new Set(violation.involved);
    for (const mapping of state.spec.mappings) {
      if (!involved.has(mapping.variable)) continue;
      (out[mapping.interaction] ??= []).push(violation);
    }
  }
  for (const id of Object.keys(out)) {
    const seen = new Set<string>();
    out[id] = out[id].filter((v) =>
      seen.has(v.message) ? false : (seen.add(v.message), true),
    );
  }
  return out;
}

export function interactionById(
  spec: InterfaceSpec,
  id: string,
): InteractionDecl | undefined {
  return spec.interactions.find((i) => i.id === id);
}
