import { describe, expect, it } from "vitest";

import { currentStep, observe, startTutorial } from "../src/tutorial.js";
import type { TutorialStep } from "../src/types.js";

const STEPS: TutorialStep[] = [
  {
    interaction: "i_t",
    values: { t: { type: "int", value: 2 } },
    payload: { index: 2 },
    instruction: "set the 't' dropdown to evi",
  },
  {
    interaction: "i_s_e",
    values: { s: { type: "int", value: 1 }, e: { type: "int", value: 2 } },
    payload: { lo: 1, hi: 2 },
    instruction: "drag the 's..e' range to (1, 2)",
  },
];

describe("startTutorial", () => {
  it("is immediately done for an empty plan", () => {
    const state = startTutorial([]);
    expect(state.status).toBe("done");
    expect(currentStep(state)).toBeNull();
  });

  it("activates the first step otherwise", () => {
    const state = startTutorial(STEPS);
    expect(state.status).toBe("active");
    expect(currentStep(state)?.interaction).toBe("i_t");
  });
});

describe("observe", () => {
  it("advances through matching interactions to done", () => {
    let state = startTutorial(STEPS);
    state = observe(state, "i_t", { index: 2 });
    expect(state.index).toBe(1);
    expect(currentStep(state)?.interaction).toBe("i_s_e");
    state = observe(state, "i_s_e", { lo: 1, hi: 2 });
    expect(state.status).toBe("done");
  });

  it("stays on the step when the right widget has the wrong value", () => {
    let state = startTutorial(STEPS);
    state = observe(state, "i_t", { index: 1 });
    expect(state.status).toBe("active");
    expect(state.index).toBe(0);
  });

  it("flags divergence on a different interaction", () => {
    let state = startTutorial(STEPS);
    state = observe(state, "i_s_e", { lo: 3, hi: 4 });
    expect(state.status).toBe("diverged");
    // further observations are ignored until a replan
    expect(observe(state, "i_t", { index: 2 }).status).toBe("diverged");
  });

  it("compares payload values loosely across string/number forms", () => {
    let state = startTutorial(STEPS);
    state = observe(state, "i_t", { index: "2" });
    expect(state.index).toBe(1);
  });
});
