// Thin typed client for the session service; the fetch function is
// injectable so tests drive it with canned responses.

import type {
  InteractionResponse,
  InterfaceSpec,
  StatePayload,
  TutorialStep,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class DigApi {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    const text = await response.text();
    const data = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(response.status, data.detail ?? text);
    }
    return data as T;
  }

  listGrammars(): Promise<{ grammars: { grammar_id: string; name: string }[] }> {
    return this.request("GET", "/grammars");
  }

  loadGrammar(source: string, name?: string): Promise<{ grammar_id: string }> {
    return this.request("POST", "/grammars", { source, name });
  }

  createSession(
    grammarId: string,
    synth: "auto" | "default" = "auto",
  ): Promise<{ session_id: string; spec: InterfaceSpec; results: StatePayload["results"] }> {
    return this.request("POST", "/sessions", { grammar_id: grammarId, synth });
  }

  applyInteraction(
    sessionId: string,
    interactionId: string,
    payload: Record<string, unknown>,
  ): Promise<InteractionResponse> {
    return this.request(
      "POST",
      `/sessions/${sessionId}/interactions/${interactionId}`,
      payload,
    );
  }

  textInput(
    sessionId: string,
    target: string,
    text: string,
    path?: string,
  ): Promise<InteractionResponse> {
    return this.request("POST", `/sessions/${sessionId}/input`, {
      target,
      text,
      path,
    });
  }

  getState(sessionId: string): Promise<StatePayload> {
    return this.request("GET", `/sessions/${sessionId}/state`);
  }

  planTutorial(
    sessionId: string,
    target: { queries?: Record<string, string>; bindings?: Record<string, unknown> },
  ): Promise<{ steps: TutorialStep[] }> {
    return this.request("POST", `/sessions/${sessionId}/tutorial`, target);
  }

  viewRows(sessionId: string, viewId: string, offset: number) {
    return this.request<{ rows: unknown[][]; next_offset?: number }>(
      "GET",
      `/sessions/${sessionId}/results/${viewId}?offset=${offset}`,
    );
  }
}
