// Payload types mirroring the server's versioned interface-spec format
// (version 1: views[], interactions[], mappings[]) and its session bodies.

export type AttrDomain =
  | { kind: "int-range"; lo: number; hi: number }
  | { kind: "num-range"; lo: number; hi: number }
  | { kind: "enum"; values: string[] }
  | { kind: "text" }
  | { kind: "date" }
  | { kind: "count"; cap: number };

export interface InteractionDecl {
  id: string;
  widget_type: string;
  label?: string;
  domain: Record<string, AttrDomain>;
  options?: string[];
  target_rule?: string;
  spawn_rule?: string;
  debounce_ms?: number;
}

export interface MappingDecl {
  interaction: string;
  variable: string;
  attrs: Record<string, string>;
}

export interface ViewDecl {
  id: string;
  starting_rule: string;
  view_type: string;
}

export interface InterfaceSpec {
  version: number;
  views: ViewDecl[];
  interactions: InteractionDecl[];
  mappings: MappingDecl[];
  layout?: Record<string, unknown>;
}

export interface TypedValue {
  type: string;
  value: unknown;
}

export interface BoundValue extends TypedValue {
  provenance?: string;
}

export interface Violation {
  kind: string;
  involved: string[];
  message: string;
}

export interface ViewResult {
  view: string;
  rule: string;
  status?: string;
  query?: string;
  columns?: { name: string; type: string }[];
  rows?: unknown[][];
  row_count?: number;
  truncated?: boolean;
  next_offset?: number;
  unbound?: string[];
  violations?: Violation[];
  error?: string;
}

export interface StatePayload {
  session_id: string;
  grammar_id: string;
  spec: InterfaceSpec;
  bindings: Record<string, BoundValue>;
  violations: Violation[];
  results: Record<string, ViewResult>;
}

export interface InteractionResponse {
  bound: Record<string, TypedValue>;
  propagated: string[];
  removed?: string[];
  violations: Violation[];
  results: Record<string, ViewResult>;
}

export interface TutorialStep {
  interaction: string;
  values: Record<string, TypedValue>;
  payload: Record<string, unknown>;
  instruction: string;
}
