// Browser bootstrap: landing page to pick/paste a grammar, then the live
// session page.  All rendering goes through the pure modules; this file
// only wires DOM events, the request queue, and the tutorial player.

import { ApiError, DigApi } from "./api.js";
import { debounce, Debounced, RequestQueue } from "./queue.js";
import { renderPanels, renderWidget, renderWidgets } from "./render.js";
import {
  applyInteractionResponse,
  ClientState,
  fromStatePayload,
  interactionById,
  markStale,
  violationsByWidget,
  widgetValues,
} from "./state.js";
import { currentStep, observe, startTutorial, TutorialState } from "./tutorial.js";
import type { InteractionResponse, StatePayload } from "./types.js";

const api = new DigApi("");
const queue = new RequestQueue();

let state: ClientState | null = null;
let tutorial: TutorialState | null = null;
const debouncers = new Map<string, Debounced<[string, Record<string, unknown>]>>();

function $(selector: string): HTMLElement {
  const found = document.querySelector(selector);
  if (!found) throw new Error(`missing element ${selector}`);
  return found as HTMLElement;
}

// ---------------------------------------------------------------------------
// Landing page
// ---------------------------------------------------------------------------

async function showLanding(): Promise<void> {
  const root = $("#app");
  const grammars = await api.listGrammars().catch(() => ({ grammars: [] }));
  const options = grammars.grammars
    .map((g) => `<option value="${g.grammar_id}">${g.name}</option>`)
    .join("");
  root.innerHTML = `
    <div class="landing">
      <h2>open a data interface</h2>
      ${options ? `<label>loaded grammars <select id="pick">${options}</select></label>
      <button id="open">open</button><hr>` : ""}
      <label>or paste grammar source</label>
      <textarea id="source" rows="10" spellcheck="false"></textarea>
      <label><input type="checkbox" id="default-synth"> plain text-input interface</label>
      <button id="load">load &amp; open</button>
      <div id="landing-error" class="violation"></div>
    </div>`;
  const open = async (grammarId: string) => {
    const synth = (document.getElementById("default-synth") as HTMLInputElement | null)
      ?.checked
      ? "default"
      : "auto";
    const session = await api.createSession(grammarId, synth);
    sessionStorage.setItem("dig-session", session.session_id);
    await resync(session.session_id);
  };
  document.getElementById("open")?.addEventListener("click", () => {
    const pick = document.getElementById("pick") as HTMLSelectElement;
    open(pick.value).catch(showLandingError);
  });
  document.getElementById("load")?.addEventListener("click", () => {
    const source = (document.getElementById("source") as HTMLTextAreaElement).value;
    api
      .loadGrammar(source)
      .then((loaded) => open(loaded.grammar_id))
      .catch(showLandingError);
  });
}

function showLandingError(error: unknown): void {
  const slot = document.getElementById("landing-error");
  if (slot) slot.textContent = error instanceof Error ? error.message : String(error);
}

// ---------------------------------------------------------------------------
// Session page
// ---------------------------------------------------------------------------

async function resync(sessionId: string): Promise<void> {
  const payload: StatePayload = await api.getState(sessionId);
  state = fromStatePayload(payload);
  renderSession();
}

function renderSession(): void {
  if (!state) return;
  const root = $("#app");
  root.innerHTML = `
    <div class="toolbar">
      <button id="back">grammars</button>
      <button id="show-me-how">show me how&hellip;</button>
      <span id="tutorial-note" class="note"></span>
    </div>
    <div class="layout">
      <aside class="widgets" id="widgets">${state ? renderWidgets(state) : ""}</aside>
      <main class="panels" id="panels">${state ? renderPanels(state) : ""}</main>
    </div>`;
  document.getElementById("back")?.addEventListener("click", () => {
    sessionStorage.removeItem("dig-session");
    showLanding().catch(console.error);
  });
  document.getElementById("show-me-how")?.addEventListener("click", () => {
    askForTutorial().catch(console.error);
  });
  wireWidgets();
  refreshTutorialHighlight();
}

function refreshPanels(): void {
  if (!state) return;
  const panels = document.getElementById("panels");
  if (panels) panels.innerHTML = renderPanels(state);
}

function refreshWidgetFeedback(): void {
  if (!state) return;
  const values = widgetValues(state);
  const violations = violationsByWidget(state);
  for (const interaction of state.spec.interactions) {
    const box = document.querySelector(`[data-widget-box="${interaction.id}"]`);
    if (!box) continue;
    const stale = renderWidget(
      interaction,
      values[interaction.id] ?? {},
      violations[interaction.id] ?? [],
    );
    // refresh everything except a control the user is typing in
    const active = document.activeElement;
    if (active && box.contains(active)) continue;
    const wrapper = document.createElement("div");
    wrapper.innerHTML = stale;
    box.replaceWith(wrapper.firstElementChild as HTMLElement);
  }
  wireWidgets();
  refreshTutorialHighlight();
}

function showWidgetError(interactionId: string, message: string): void {
  const slot = document.querySelector(`[data-error-for="${interactionId}"]`);
  if (slot) slot.textContent = message;
}

function clearWidgetErrors(): void {
  document.querySelectorAll("[data-error-for]").forEach((el) => {
    el.textContent = "";
  });
}

function submit(interactionId: string, payload: Record<string, unknown>): void {
  if (!state) return;
  const sessionId = state.sessionId;
  state = markStale(state, state.spec.views.map((v) => v.id));
  refreshPanels();
  queue
    .enqueue(() => api.applyInteraction(sessionId, interactionId, payload))
    .then((response: InteractionResponse) => {
      if (!state) return;
      clearWidgetErrors();
      state = applyInteractionResponse(state, response);
      state = { ...state, stale: [] };
      refreshPanels();
      refreshWidgetFeedback();
      if (tutorial) {
        tutorial = observe(tutorial, interactionId, payload);
        refreshTutorialHighlight();
      }
    })
    .catch((error) => {
      if (error instanceof ApiError) {
        showWidgetError(interactionId, error.detail);
        if (state) {
          state = { ...state, stale: [] };
          refreshPanels();
        }
      } else {
        // network failure: keep panels stale so the staleness is visible
        console.error(error);
      }
    });
}

function submitText(interactionId: string, target: string, text: string,
                    path?: string): void {
  if (!state) return;
  const sessionId = state.sessionId;
  state = markStale(state, state.spec.views.map((v) => v.id));
  refreshPanels();
  queue
    .enqueue(() => api.textInput(sessionId, target, text, path))
    .then((response) => {
      if (!state) return;
      clearWidgetErrors();
      state = applyInteractionResponse(state, response);
      state = { ...state, stale: [] };
      refreshPanels();
      refreshWidgetFeedback();
      if (tutorial) {
        tutorial = observe(tutorial, interactionId, { text });
        refreshTutorialHighlight();
      }
    })
    .catch((error) => {
      if (error instanceof ApiError) {
        showWidgetError(interactionId, error.detail);
        if (state) {
          state = { ...state, stale: [] };
          refreshPanels();
        }
      } else {
        console.error(error);
      }
    });
}

function payloadFor(interactionId: string): Record<string, unknown> | null {
  if (!state) return null;
  const interaction = interactionById(state.spec, interactionId);
  if (!interaction) return null;
  const controls = document.querySelectorAll(`[data-widget="${interactionId}"]`);
  const payload: Record<string, unknown> = {};
  controls.forEach((el) => {
    const input = el as HTMLInputElement;
    const attr = input.dataset.attr;
    if (!attr) return;
    if (input.type === "radio") {
      if (input.checked) payload[attr] = Number(input.value);
      return;
    }
    if (input.type === "checkbox") {
      payload[attr] = input.checked;
      return;
    }
    if (input.value === "") return;
    const domain = interaction.domain[attr];
    if (domain && (domain.kind === "int-range" || domain.kind === "num-range")) {
      payload[attr] = Number(input.value);
    } else if (domain && domain.kind === "count") {
      payload[attr] = Number(input.dataset.count ?? 0);
    } else if (attr === "index") {
      payload[attr] = Number(input.value);
    } else {
      payload[attr] = input.value;
    }
  });
  return payload;
}

function wireWidgets(): void {
  if (!state) return;
  for (const interaction of state.spec.interactions) {
    const controls = document.querySelectorAll(`[data-widget="${interaction.id}"]`);
    controls.forEach((el) => {
      const input = el as HTMLInputElement;
      if (input.dataset.wired) return;
      input.dataset.wired = "1";
      const isText = interaction.widget_type === "text-input" ||
        (input.type === "text" && !input.dataset.count);
      if (isText) {
        input.addEventListener("keydown", (event) => {
          if ((event as KeyboardEvent).key !== "Enter") return;
          const target = input.dataset.targetRule;
          if (target) {
            submitText(interaction.id, target, input.value, input.dataset.path);
          } else {
            submit(interaction.id, { text: input.value, path: input.dataset.path });
          }
        });
        return;
      }
      if (input.type === "range") {
        const ms = interaction.debounce_ms ?? 150;
        let debounced = debouncers.get(interaction.id);
        if (!debounced) {
          debounced = debounce((id: string, payload: Record<string, unknown>) => {
            submit(id, payload);
          }, ms);
          debouncers.set(interaction.id, debounced);
        }
        input.addEventListener("input", () => {
          const output = input.nextElementSibling;
          if (output && output.tagName === "OUTPUT") {
            output.textContent = input.value;
          }
          const payload = payloadFor(interaction.id);
          if (payload && Object.keys(payload).length === Object.keys(interaction.domain).length) {
            debounced!(interaction.id, payload);
          }
        });
        return;
      }
      if (input.dataset.count !== undefined) {
        input.addEventListener("click", () => {
          const next = Number(input.dataset.count ?? 0) + 1;
          input.dataset.count = String(next);
          input.textContent = `add (${next})`;
          submit(interaction.id, { count: next, path: input.dataset.path });
        });
        return;
      }
      input.addEventListener("change", () => {
        const payload = payloadFor(interaction.id);
        if (payload && Object.keys(payload).length > 0) {
          submit(interaction.id, payload);
        }
      });
    });
  }
}

// ---------------------------------------------------------------------------
// Tutorial player
// ---------------------------------------------------------------------------

async function askForTutorial(): Promise<void> {
  if (!state) return;
  const rules = state.spec.views.map((v) => v.starting_rule)
    .filter((r) => !r.endsWith("_bg"));
  const rule = rules[0];
  const query = window.prompt(
    `target query for ${rule} (the tutorial walks you there from here):`,
  );
  if (!query) return;
  try {
    const plan = await api.planTutorial(state.sessionId, {
      queries: { [rule]: query },
    });
    tutorial = startTutorial(plan.steps);
    refreshTutorialHighlight();
  } catch (error) {
    if (error instanceof ApiError) setTutorialNote(error.detail);
  }
}

function setTutorialNote(text: string): void {
  const note = document.getElementById("tutorial-note");
  if (note) note.textContent = text;
}

function refreshTutorialHighlight(): void {
  document.querySelectorAll(".tutorial-active").forEach((el) => {
    el.classList.remove("tutorial-active");
  });
  if (!tutorial) {
    setTutorialNote("");
    return;
  }
  if (tutorial.status === "done") {
    setTutorialNote(tutorial.steps.length ? "tutorial complete" : "nothing to do");
    return;
  }
  if (tutorial.status === "diverged") {
    setTutorialNote("you went off the path; press “show me how” to replan");
    return;
  }
  const step = currentStep(tutorial);
  if (!step) return;
  setTutorialNote(
    `step ${tutorial.index + 1}/${tutorial.steps.length}: ${step.instruction}`,
  );
  const box = document.querySelector(`[data-widget-box="${step.interaction}"]`);
  box?.classList.add("tutorial-active");
}

// ---------------------------------------------------------------------------

async function start(): Promise<void> {
  const existing = sessionStorage.getItem("dig-session");
  if (existing) {
    try {
      await resync(existing);
      return;
    } catch {
      sessionStorage.removeItem("dig-session");
    }
  }
  await showLanding();
}

start().catch(console.error);
