/**
 * Browser entry point: wires the API client, the studio state, and the
 * renderer together. All decisions live in the imported modules; this
 * file only glues them to the document.
 */

import {
  ApiClient,
  GateError,
  type Order,
  type SessionSummary,
} from "./api";
import { mount } from "./dom";
import { renderApp, type Actions } from "./render";
import {
  initialStudio,
  selectionItems,
  setChoice,
  type Screen,
  type Studio,
} from "./viewmodel";
import "./style.css";

const DEFAULT_BASE = "http://127.0.0.1:8000";

let state: Studio = initialStudio(DEFAULT_BASE);
let client = new ApiClient(state.baseUrl);

function update(patch: Partial<Studio>): void {
  state = { ...state, ...patch };
  render();
}

function render(): void {
  const root = document.getElementById("app");
  if (root) {
    mount(root, renderApp(state, actions), document);
  }
}

function textareaValue(selector: string): string {
  const el = document.querySelector<HTMLTextAreaElement>(selector);
  return el ? el.value.trim() : "";
}

async function run(task: () => Promise<void>): Promise<void> {
  update({ busy: true, error: null });
  try {
    await task();
    update({ busy: false });
  } catch (err) {
    update({ busy: false, error: err instanceof Error ? err.message : String(err) });
  }
}

async function openSession(summary: SessionSummary): Promise<void> {
  const graphs = await client.graphs(summary.id);
  update({
    session: summary,
    graphs,
    candidates: null,
    draft: {},
    selection: null,
    trace: null,
    gate: null,
    force: false,
    screen: "graphs",
  });
  const candidates = await client.candidates(summary.id);
  const session = await client.getSession(summary.id);
  update({ candidates, session });
}

async function refreshTrace(force: boolean): Promise<void> {
  if (!state.session) {
    return;
  }
  try {
    const trace = await client.trace(state.session.id, force);
    update({ trace, gate: null, force, session: { ...state.session, stage: trace.stage } });
  } catch (err) {
    if (err instanceof GateError) {
      update({ gate: err.verification, trace: null });
      return;
    }
    throw err;
  }
}

const actions: Actions = {
  setBaseUrl: (value: string) => {
    client = new ApiClient(value);
    update({ baseUrl: value });
  },

  loadDefault: () =>
    void run(async () => {
      await openSession(await client.createSession());
    }),

  loadScenarioXml: () =>
    void run(async () => {
      await openSession(await client.createSession(textareaValue(".scenario-xml")));
    }),

  resumeSessionXml: () =>
    void run(async () => {
      await openSession(await client.loadSession(textareaValue(".session-xml")));
    }),

  showScreen: (screen: Screen) => {
    update({ screen });
    if (screen === "simulator" && state.trace === null && state.gate === null) {
      void run(() => refreshTrace(state.force));
    }
  },

  setChoice: (pardep: number, pair: number, order: Order | null) => {
    update({ draft: setChoice(state.draft, pardep, pair, order) });
  },

  applySelection: () =>
    void run(async () => {
      if (!state.session) {
        return;
      }
      const selection = await client.putSelection(
        state.session.id,
        selectionItems(state.draft),
      );
      update({
        selection,
        trace: null,
        gate: null,
        force: false,
        session: { ...state.session, stage: selection.stage },
        screen: "verdict",
      });
    }),

  stepChoice: (index: number) =>
    void run(async () => {
      if (!state.session) {
        return;
      }
      try {
        const trace = await client.step(state.session.id, index, state.force);
        update({ trace, session: { ...state.session, stage: trace.stage } });
      } catch (err) {
        if (err instanceof GateError) {
          update({ gate: err.verification, trace: null });
          return;
        }
        throw err;
      }
    }),

  runForced: () => void run(() => refreshTrace(true)),

  resetTrace: () =>
    void run(async () => {
      if (!state.session) {
        return;
      }
      try {
        const trace = await client.reset(state.session.id);
        update({ trace, session: { ...state.session, stage: trace.stage } });
      } catch (err) {
        // resetting drops the force flag, so a flagged session regates
        if (err instanceof GateError) {
          update({ gate: err.verification, trace: null, force: false });
          return;
        }
        throw err;
      }
    }),
};

document.addEventListener("DOMContentLoaded", render);
