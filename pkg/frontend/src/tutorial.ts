// Tutorial player: a pure state machine over a fetched plan.  The active
// step's widget gets highlighted; the machine advances when the user
// performs that step's interaction with the planned values, and flags
// divergence (asking for a replan) when a different widget is used.

import type { TutorialStep } from "./types.js";

export type TutorialStatus = "active" | "done" | "diverged";

export interface TutorialState {
  steps: TutorialStep[];
  index: number;
  status: TutorialStatus;
}

export function startTutorial(steps: TutorialStep[]): TutorialState {
  return { steps, index: 0, status: steps.length === 0 ? "done" : "active" };
}

export function currentStep(state: TutorialState): TutorialStep | null {
  if (state.status !== "active") return null;
  return state.steps[state.index] ?? null;
}

function payloadMatches(planned: Record<string, unknown>,
                        actual: Record<string, unknown>): boolean {
  return Object.entries(planned).every(
    ([key, value]) => String(actual[key]) === String(value),
  );
}

/** Feed an interaction the user just performed into the machine. */
export function observe(
  state: TutorialState,
  interactionId: string,
  payload: Record<string, unknown>,
): TutorialState {
  const step = currentStep(state);
  if (step === null) return state;
  if (step.interaction !== interactionId) {
    return { ...state, status: "diverged" };
  }
  if (!payloadMatches(step.payload, payload)) {
    return state; // right widget, target value not reached yet
  }
  const index = state.index + 1;
  return {
    ...state,
    index,
    status: index >= state.steps.length ? "done" : "active",
  };
}
