/**
 * Deterministic graph layout for the state-machine views.
 *
 * States are placed on a grid: the column is the BFS depth from the
 * initial state, the row is the order of discovery within that depth.
 * States unreachable from the initial state get trailing columns so
 * nothing is silently dropped.
 */

import type { Protocol } from "./api";

export const COL_GAP = 150;
export const ROW_GAP = 90;
export const MARGIN = 60;
export const RADIUS = 18;

export interface NodePos {
  id: string;
  x: number;
  y: number;
  initial: boolean;
  final: boolean;
}

export interface EdgePos {
  from: string;
  to: string;
  label: string;
  display: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  /** Self-transition, drawn as an arc above the node. */
  loop: boolean;
}

export interface GraphLayout {
  width: number;
  height: number;
  nodes: NodePos[];
  edges: EdgePos[];
}

export function layoutProtocol(protocol: Protocol): GraphLayout {
  const adjacency = new Map<string, string[]>();
  for (const t of protocol.transitions) {
    const targets = adjacency.get(t.from);
    if (targets) {
      targets.push(t.to);
    } else {
      adjacency.set(t.from, [t.to]);
    }
  }

  const depth = new Map<string, number>([[protocol.initial, 0]]);
  const queue = [protocol.initial];
  while (queue.length > 0) {
    const state = queue.shift()!;
    for (const next of adjacency.get(state) ?? []) {
      if (!depth.has(next)) {
        depth.set(next, depth.get(state)! + 1);
        queue.push(next);
      }
    }
  }

  let maxDepth = 0;
  for (const d of depth.values()) {
    maxDepth = Math.max(maxDepth, d);
  }
  for (const state of protocol.states) {
    if (!depth.has(state.id)) {
      maxDepth += 1;
      depth.set(state.id, maxDepth);
    }
  }

  const rows = new Map<number, number>();
  const positions = new Map<string, NodePos>();
  for (const state of protocol.states) {
    const col = depth.get(state.id)!;
    const row = rows.get(col) ?? 0;
    rows.set(col, row + 1);
    positions.set(state.id, {
      id: state.id,
      x: MARGIN + col * COL_GAP,
      y: MARGIN + row * ROW_GAP,
      initial: state.id === protocol.initial,
      final: state.final,
    });
  }

  const displays = new Map(protocol.labels.map((l) => [l.id, l.display]));
  const edges: EdgePos[] = protocol.transitions.map((t) => {
    const a = positions.get(t.from)!;
    const b = positions.get(t.to)!;
    return {
      from: t.from,
      to: t.to,
      label: t.label,
      display: displays.get(t.label) ?? t.label,
      x1: a.x,
      y1: a.y,
      x2: b.x,
      y2: b.y,
      loop: t.from === t.to,
    };
  });

  let width = 2 * MARGIN;
  let height = 2 * MARGIN;
  for (const pos of positions.values()) {
    width = Math.max(width, pos.x + MARGIN);
    height = Math.max(height, pos.y + MARGIN);
  }
  return { width, height, nodes: [...positions.values()], edges };
}
