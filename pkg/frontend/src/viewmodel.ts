/**
 * Pure state for the studio. Everything here is plain data plus
 * side-effect-free helpers, so the view logic can be exercised without
 * a DOM or a server.
 */

import type {
  Candidates,
  Graphs,
  Order,
  Report,
  Selection,
  SelectionItem,
  SessionSummary,
  Trace,
  Verification,
} from "./api";

export type Screen = "load" | "graphs" | "pairs" | "verdict" | "simulator";

export interface Studio {
  baseUrl: string;
  screen: Screen;
  busy: boolean;
  error: string | null;
  session: SessionSummary | null;
  graphs: Graphs | null;
  candidates: Candidates | null;
  /** Orientation picked per candidate pair, keyed by draftKey(). */
  draft: Record<string, Order>;
  selection: Selection | null;
  trace: Trace | null;
  /** Merged report behind a 409 refusal; shown as the force banner. */
  gate: Report | null;
  force: boolean;
}

export function initialStudio(baseUrl: string): Studio {
  return {
    baseUrl,
    screen: "load",
    busy: false,
    error: null,
    session: null,
    graphs: null,
    candidates: null,
    draft: {},
    selection: null,
    trace: null,
    gate: null,
    force: false,
  };
}

export function draftKey(pardep: number, pair: number): string {
  return `${pardep}:${pair}`;
}

/** Set or clear one pair's orientation; returns a fresh draft. */
export function setChoice(
  draft: Record<string, Order>,
  pardep: number,
  pair: number,
  order: Order | null,
): Record<string, Order> {
  const next = { ...draft };
  const key = draftKey(pardep, pair);
  if (order === null) {
    delete next[key];
  } else {
    next[key] = order;
  }
  return next;
}

/** Turn the draft into the selection payload, ordered by group then pair. */
export function selectionItems(draft: Record<string, Order>): SelectionItem[] {
  return Object.entries(draft)
    .map(([key, order]) => {
      const [pardep, pair] = key.split(":").map(Number);
      return { pardep, pair, order };
    })
    .sort((a, b) => a.pardep - b.pardep || a.pair - b.pair);
}

/** Which label dominates for a pair under the given orientation. */
export function orient(
  pair: { left: string; right: string },
  order: Order,
): { dominant: string; dominated: string } {
  return order === "leftFirst"
    ? { dominant: pair.left, dominated: pair.right }
    : { dominant: pair.right, dominated: pair.left };
}

/**
 * Labels that take part in flagged cycles, with the set of cycle kinds
 * they appear in. Drives the verdict-view highlighting.
 */
export function flaggedLabelKinds(report: Report): Record<string, string[]> {
  const kinds: Record<string, Set<string>> = {};
  for (const flag of report.flagged) {
    for (const dep of [flag.first, flag.second]) {
      for (const label of [dep.dominant, dep.dominated]) {
        (kinds[label] ??= new Set()).add(flag.kind);
      }
    }
  }
  return Object.fromEntries(
    Object.entries(kinds).map(([label, set]) => [label, [...set].sort()]),
  );
}

/** label -> dependencies currently holding it back. */
export function blockedMap(trace: Trace): Record<string, string[]> {
  return Object.fromEntries(trace.blocked.map((b) => [b.label, b.blocking]));
}

const STAGE_RANK: Record<string, number> = {
  loaded: 0,
  analyzed: 1,
  verified: 2,
  exploring: 3,
};

export function stageRank(stage: string): number {
  return STAGE_RANK[stage] ?? -1;
}

/** Tabs unlock as the session advances through its lifecycle. */
export function screenReachable(state: Studio, screen: Screen): boolean {
  switch (screen) {
    case "load":
      return true;
    case "graphs":
    case "pairs":
      return state.session !== null;
    case "verdict":
    case "simulator":
      return state.session !== null && stageRank(state.session.stage) >= 2;
  }
}

export function mergedVerdict(state: Studio): Verification | null {
  return state.selection?.verification ?? null;
}

/** One-line summary for the gate banner. */
export function gateSummary(report: Report): string {
  const kinds = report.flagged.map((f) => f.kind);
  const counts = new Map<string, number>();
  for (const kind of kinds) {
    counts.set(kind, (counts.get(kind) ?? 0) + 1);
  }
  const parts = [...counts.entries()].map(([kind, n]) => `${n} ${kind}`);
  return `verification flagged ${parts.join(", ")} cycle(s)`;
}
