import { describe, expect, it } from "vitest";

import { ApiError, DigApi } from "../src/api.js";

function fakeFetch(routes: Record<string, { status?: number; body: unknown }>) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const key = `${init?.method ?? "GET"} ${url}`;
    const route = routes[key];
    if (!route) {
      return new Response(JSON.stringify({ detail: "not found" }), { status: 404 });
    }
    return new Response(JSON.stringify(route.body), { status: route.status ?? 200 });
  };
  return { fn, calls };
}

describe("DigApi", () => {
  it("posts interaction payloads to the session endpoint", async () => {
    const { fn, calls } = fakeFetch({
      "POST /sessions/s1/interactions/i_t": {
        body: { bound: {}, propagated: [], violations: [], results: {} },
      },
    });
    const api = new DigApi("", fn);
    await api.applyInteraction("s1", "i_t", { index: 2 });
    expect(calls[0].url).toBe("/sessions/s1/interactions/i_t");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ index: 2 });
  });

  it("raises ApiError with the server detail on non-2xx", async () => {
    const { fn } = fakeFetch({
      "POST /sessions/s1/interactions/i_t": {
        status: 422,
        body: { detail: "value 5 rejected for 't': outside [1, 2]" },
      },
    });
    const api = new DigApi("", fn);
    await expect(api.applyInteraction("s1", "i_t", { index: 5 })).rejects.toThrow(
      ApiError,
    );
    await expect(
      api.applyInteraction("s1", "i_t", { index: 5 }),
    ).rejects.toMatchObject({ status: 422 });
  });

  it("fetches session state for resync", async () => {
    const { fn, calls } = fakeFetch({
      "GET /sessions/s1/state": {
        body: { session_id: "s1", grammar_id: "g1",
                spec: { version: 1, views: [], interactions: [], mappings: [] },
                bindings: {}, violations: [], results: {} },
      },
    });
    const api = new DigApi("", fn);
    const state = await api.getState("s1");
    expect(state.session_id).toBe("s1");
    expect(calls[0].init?.method).toBe("GET");
  });

  it("requests tutorial plans with query targets", async () => {
    const { fn, calls } = fakeFetch({
      "POST /sessions/s1/tutorial": { body: { steps: [] } },
    });
    const api = new DigApi("", fn);
    const plan = await api.planTutorial("s1", { queries: { q: "SELECT 1" } });
    expect(plan.steps).toEqual([]);
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      queries: { q: "SELECT 1" },
    });
  });
});
