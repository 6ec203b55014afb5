/**
 * View layer: plain virtual nodes built by h(), turned into DOM
 * elsewhere. Screens are pure functions of the studio state plus an
 * actions object, which keeps every branch assertable in tests.
 */

import type {
  ArgumentMatch,
  CandidateGroup,
  CandidatePair,
  Order,
  Protocol,
  Report,
} from "./api";
import { layoutProtocol, RADIUS } from "./layout";
import {
  blockedMap,
  draftKey,
  flaggedLabelKinds,
  gateSummary,
  orient,
  screenReachable,
  selectionItems,
  type Screen,
  type Studio,
} from "./viewmodel";

export type Handler = (value: string) => void;

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  on: Record<string, Handler>;
  children: (VNode | string)[];
}

type Child = VNode | string | null | undefined | false;
type AttrValue = string | number | boolean | Handler | null | undefined;

/** Hyperscript helper. Attr keys starting with "on" take handlers. */
export function h(
  tag: string,
  attrs: Record<string, AttrValue> = {},
  ...children: (Child | Child[])[]
): VNode {
  const plain: Record<string, string> = {};
  const on: Record<string, Handler> = {};
  for (const [key, value] of Object.entries(attrs)) {
    if (value === null || value === undefined || value === false) {
      continue;
    }
    if (typeof value === "function") {
      on[key.replace(/^on/, "")] = value;
    } else {
      plain[key] = value === true ? "" : String(value);
    }
  }
  const flat: (VNode | string)[] = [];
  for (const child of children.flat()) {
    if (child !== null && child !== undefined && child !== false) {
      flat.push(child);
    }
  }
  return { tag, attrs: plain, on, children: flat };
}

/** Depth-first search over a vnode tree; test helper and nothing more. */
export function findAll(node: VNode, pred: (n: VNode) => boolean): VNode[] {
  const hits: VNode[] = [];
  const walk = (n: VNode) => {
    if (pred(n)) {
      hits.push(n);
    }
    for (const child of n.children) {
      if (typeof child !== "string") {
        walk(child);
      }
    }
  };
  walk(node);
  return hits;
}

export function textOf(node: VNode): string {
  return node.children
    .map((c) => (typeof c === "string" ? c : textOf(c)))
    .join("");
}

export interface Actions {
  setBaseUrl: Handler;
  loadDefault: () => void;
  loadScenarioXml: () => void;
  resumeSessionXml: () => void;
  showScreen: (screen: Screen) => void;
  setChoice: (pardep: number, pair: number, order: Order | null) => void;
  applySelection: () => void;
  stepChoice: (index: number) => void;
  runForced: () => void;
  resetTrace: () => void;
}

export function renderApp(state: Studio, act: Actions): VNode {
  return h(
    "div",
    { class: "studio" },
    renderNav(state, act),
    state.error && h("div", { class: "banner banner-error" }, state.error),
    state.busy && h("div", { class: "banner banner-busy" }, "working..."),
    renderScreen(state, act),
  );
}

function renderScreen(state: Studio, act: Actions): VNode {
  switch (state.screen) {
    case "load":
      return renderLoadScreen(state, act);
    case "graphs":
      return renderGraphScreen(state);
    case "pairs":
      return renderPairScreen(state, act);
    case "verdict":
      return renderVerdictScreen(state);
    case "simulator":
      return renderSimulatorScreen(state, act);
  }
}

const SCREENS: { id: Screen; title: string }[] = [
  { id: "load", title: "Scenario" },
  { id: "graphs", title: "Graphs" },
  { id: "pairs", title: "Dependencies" },
  { id: "verdict", title: "Verdict" },
  { id: "simulator", title: "Simulator" },
];

function renderNav(state: Studio, act: Actions): VNode {
  return h(
    "header",
    { class: "nav" },
    h(
      "nav",
      { class: "tabs" },
      SCREENS.map(({ id, title }) => {
        const reachable = screenReachable(state, id);
        return h(
          "button",
          {
            class: [
              "tab",
              state.screen === id && "tab-active",
              !reachable && "tab-disabled",
            ]
              .filter(Boolean)
              .join(" "),
            disabled: !reachable,
            "data-screen": id,
            onclick: () => act.showScreen(id),
          },
          title,
        );
      }),
    ),
    state.session &&
      h(
        "div",
        { class: "session-line" },
        h("code", { class: "composition" }, state.session.composition),
        h("span", { class: `stage stage-${state.session.stage}` }, state.session.stage),
      ),
  );
}

// Screen: scenario load

function renderLoadScreen(state: Studio, act: Actions): VNode {
  return h(
    "section",
    { class: "screen screen-load" },
    h("h1", {}, "Dependency studio"),
    h(
      "p",
      { class: "hint" },
      "Load a scenario, pick which data dependencies to enforce, check the ",
      "verdict, then step through the composed system.",
    ),
    h(
      "label",
      { class: "field" },
      "API base URL",
      h("input", {
        class: "base-url",
        value: state.baseUrl,
        onchange: act.setBaseUrl,
      }),
    ),
    h(
      "div",
      { class: "cards" },
      h(
        "div",
        { class: "card" },
        h("h2", {}, "Packaged scenario"),
        h("p", {}, "Start from the scenario the server was launched with."),
        h("button", { class: "load-default", onclick: () => act.loadDefault() }, "Load default"),
      ),
      h(
        "div",
        { class: "card" },
        h("h2", {}, "Scenario XML"),
        h("textarea", { class: "scenario-xml", rows: 8, placeholder: "<scenario ..." }),
        h(
          "button",
          { class: "load-xml", onclick: () => act.loadScenarioXml() },
          "Load scenario",
        ),
      ),
      h(
        "div",
        { class: "card" },
        h("h2", {}, "Saved session"),
        h("textarea", { class: "session-xml", rows: 8, placeholder: "<session ..." }),
        h(
          "button",
          { class: "resume-xml", onclick: () => act.resumeSessionXml() },
          "Resume session",
        ),
      ),
    ),
  );
}

// Screen: protocol graphs

function renderGraphScreen(state: Studio): VNode {
  if (!state.graphs) {
    return h("section", { class: "screen screen-graphs" }, placeholder("no graphs yet"));
  }
  return h(
    "section",
    { class: "screen screen-graphs" },
    h("h2", {}, "Client protocols"),
    state.graphs.clients.map((p) => renderProtocol(p, "client")),
    h("h2", {}, "Service protocols"),
    state.graphs.services.map((p) => renderProtocol(p, "service")),
  );
}

function renderProtocol(protocol: Protocol, role: string): VNode {
  const layout = layoutProtocol(protocol);
  return h(
    "figure",
    { class: `protocol protocol-${role}`, "data-protocol": protocol.id },
    h("figcaption", {}, h("strong", {}, protocol.id), ` (${role})`),
    h(
      "svg",
      {
        class: "graph",
        viewBox: `0 0 ${layout.width} ${layout.height}`,
        width: layout.width,
        height: layout.height,
      },
      layout.edges.map((e) =>
        e.loop
          ? h(
              "g",
              { class: "edge edge-loop", "data-label": e.label },
              h("path", {
                d: `M ${e.x1 - 10} ${e.y1 - RADIUS} C ${e.x1 - 30} ${e.y1 - 55}, ${e.x1 + 30} ${e.y1 - 55}, ${e.x1 + 10} ${e.y1 - RADIUS}`,
                class: "edge-line",
              }),
              h("text", { x: e.x1, y: e.y1 - 48, class: "edge-text" }, e.display),
            )
          : h(
              "g",
              { class: "edge", "data-label": e.label },
              h("line", {
                x1: e.x1,
                y1: e.y1,
                x2: e.x2,
                y2: e.y2,
                class: "edge-line",
              }),
              h(
                "text",
                {
                  x: (e.x1 + e.x2) / 2,
                  y: (e.y1 + e.y2) / 2 - 6,
                  class: "edge-text",
                },
                e.display,
              ),
            ),
      ),
      layout.nodes.map((n) =>
        h(
          "g",
          {
            class: ["node", n.initial && "node-initial", n.final && "node-final"]
              .filter(Boolean)
              .join(" "),
            "data-state": n.id,
          },
          h("circle", { cx: n.x, cy: n.y, r: RADIUS, class: "node-ring" }),
          n.final && h("circle", { cx: n.x, cy: n.y, r: RADIUS - 4, class: "node-ring-inner" }),
          h("text", { x: n.x, y: n.y + 4, class: "node-text" }, n.id),
        ),
      ),
    ),
    protocol.contextProfile.length > 0 &&
      h(
        "table",
        { class: "context-profile" },
        h(
          "tr",
          {},
          h("th", {}, "attribute"),
          h("th", {}, "value"),
          h("th", {}, "kind"),
          h("th", {}, "visibility"),
        ),
        protocol.contextProfile.map((attr) =>
          h(
            "tr",
            {},
            h("td", {}, attr.name),
            h("td", {}, h("code", {}, attr.value)),
            h("td", {}, attr.kind),
            h("td", {}, attr.visibility),
          ),
        ),
      ),
  );
}

// Screen: candidate pair selection

function renderPairScreen(state: Studio, act: Actions): VNode {
  if (!state.candidates) {
    return h("section", { class: "screen screen-pairs" }, placeholder("analysis pending"));
  }
  const picked = selectionItems(state.draft).length;
  return h(
    "section",
    { class: "screen screen-pairs" },
    h("h2", {}, "Candidate dependencies"),
    state.candidates.groups.length === 0
      ? placeholder("no concurrent clients share data")
      : state.candidates.groups.map((g) => renderGroup(g, state, act)),
    h(
      "div",
      { class: "apply-row" },
      h(
        "button",
        { class: "apply-selection", onclick: () => act.applySelection() },
        `Apply selection (${picked} pair${picked === 1 ? "" : "s"})`,
      ),
    ),
  );
}

function renderGroup(group: CandidateGroup, state: Studio, act: Actions): VNode {
  return h(
    "div",
    { class: "group", "data-pardep": group.pardep },
    h("h3", {}, h("code", {}, `${group.left} || ${group.right}`)),
    group.pairs.map((pair, index) => renderPair(group, pair, index, state, act)),
  );
}

function renderPair(
  group: CandidateGroup,
  pair: CandidatePair,
  index: number,
  state: Studio,
  act: Actions,
): VNode {
  const key = draftKey(group.pardep, index);
  const current = state.draft[key];
  const name = `choice-${key}`;
  const option = (order: Order | null, title: string) =>
    h(
      "label",
      { class: "option" },
      h("input", {
        type: "radio",
        name,
        value: order ?? "none",
        checked: (current ?? null) === order,
        onchange: () => act.setChoice(group.pardep, index, order),
      }),
      title,
    );
  const leftFirst = orient(pair, "leftFirst");
  const rightFirst = orient(pair, "rightFirst");
  return h(
    "div",
    { class: "pair", "data-pair": key },
    h("code", { class: "pair-title" }, `${pair.left} ~ ${pair.right}`),
    h(
      "ul",
      { class: "matches" },
      pair.matches.map((m) => h("li", {}, describeMatch(m))),
    ),
    h(
      "div",
      { class: "options" },
      option(null, "ignore"),
      option("leftFirst", `${leftFirst.dominant} before ${leftFirst.dominated}`),
      option("rightFirst", `${rightFirst.dominant} before ${rightFirst.dominated}`),
    ),
  );
}

function describeMatch(m: ArgumentMatch): string {
  return `${m.leftArg} ~ ${m.rightArg}  ${m.degree}  (${m.type})`;
}

// Screen: verification verdict

function renderVerdictScreen(state: Studio): VNode {
  const selection = state.selection;
  if (!selection) {
    return h("section", { class: "screen screen-verdict" }, placeholder("nothing verified yet"));
  }
  const verdict = selection.verification;
  return h(
    "section",
    { class: "screen screen-verdict" },
    verdict.consistent
      ? h("div", { class: "verdict verdict-ok" }, "no potential deadlocks")
      : h(
          "div",
          { class: "verdict verdict-flagged" },
          `${verdict.merged.flagged.length} potential deadlock(s) flagged`,
        ),
    !verdict.consistent && renderReport(verdict.merged),
    verdict.merged.chainWarnings.length > 0 &&
      h(
        "ul",
        { class: "chain-warnings" },
        verdict.merged.chainWarnings.map((w) => h("li", { class: "warning" }, w)),
      ),
    h("h3", {}, "Enforced dependencies"),
    h(
      "ul",
      { class: "dependencies" },
      selection.extended.dependencies.map((d) =>
        h("li", {}, h("code", {}, `${d.dominant} > ${d.dominated}`)),
      ),
    ),
  );
}

function renderReport(report: Report): VNode {
  const kinds = flaggedLabelKinds(report);
  return h(
    "ul",
    { class: "flagged" },
    report.flagged.map((flag) =>
      h(
        "li",
        { class: `flag flag-${flag.kind}` },
        h("span", { class: "flag-kind" }, flag.kind),
        h(
          "span",
          { class: "flag-deps" },
          depText(flag.first.dominant, kinds),
          " > ",
          depText(flag.first.dominated, kinds),
          "  with  ",
          depText(flag.second.dominant, kinds),
          " > ",
          depText(flag.second.dominated, kinds),
        ),
        h("p", { class: "flag-explanation" }, flag.explanation),
      ),
    ),
  );
}

function depText(label: string, kinds: Record<string, string[]>): VNode {
  const involved = kinds[label] ?? [];
  return h(
    "code",
    { class: ["flag-label", ...involved.map((k) => `in-${k}`)].join(" ") },
    label,
  );
}

// Screen: simulator

function renderSimulatorScreen(state: Studio, act: Actions): VNode {
  const children: (VNode | string | false | null)[] = [];
  if (state.gate) {
    children.push(
      h(
        "div",
        { class: "banner banner-gate" },
        gateSummary(state.gate),
        h("button", { class: "run-forced", onclick: () => act.runForced() }, "Run anyway"),
      ),
    );
  }
  const trace = state.trace;
  if (!trace) {
    children.push(placeholder("no trace yet"));
  } else {
    const blocked = blockedMap(trace);
    children.push(
      h(
        "ol",
        { class: "steps" },
        trace.steps.map((s) => h("li", { class: `step step-${s.kind}` }, s.description)),
      ),
      trace.completed
        ? h("div", { class: "completed" }, "all clients reached a final state")
        : h(
            "div",
            { class: "frontier" },
            h("h3", {}, "Enabled"),
            trace.enabled.length === 0 && trace.blocked.length === 0
              ? h("div", { class: "deadlock" }, "deadlock: nothing can move")
              : h(
                  "ul",
                  { class: "enabled" },
                  trace.enabled.map((e) =>
                    h(
                      "li",
                      {},
                      h(
                        "button",
                        { class: "choice", onclick: () => act.stepChoice(e.index) },
                        `[${e.index}] ${e.description}`,
                      ),
                    ),
                  ),
                ),
            trace.blocked.length > 0 &&
              h(
                "div",
                {},
                h("h3", {}, "Blocked"),
                h(
                  "ul",
                  { class: "blocked-list" },
                  trace.blocked.map((b) =>
                    h(
                      "li",
                      {
                        class: "blocked",
                        title: `needs ${blocked[b.label].join(", ")}`,
                      },
                      h("code", {}, b.label),
                      h("small", {}, ` needs ${b.blocking.join(", ")}`),
                    ),
                  ),
                ),
              ),
          ),
      h(
        "div",
        { class: "trace-controls" },
        h("button", { class: "reset", onclick: () => act.resetTrace() }, "Reset trace"),
      ),
    );
  }
  return h("section", { class: "screen screen-simulator" }, ...children);
}

function placeholder(message: string): VNode {
  return h("p", { class: "placeholder" }, message);
}
