/**
 * Turn virtual nodes into real elements. The document is passed in
 * rather than taken from a global, so the conversion is testable with
 * a recording stub.
 */

import type { VNode } from "./render";

const SVG_NS = "http://www.w3.org/2000/svg";

const SVG_TAGS = new Set([
  "svg",
  "g",
  "circle",
  "line",
  "path",
  "text",
  "rect",
  "polygon",
  "marker",
  "defs",
]);

export interface MinimalDocument {
  createElement(tag: string): Element;
  createElementNS(ns: string, tag: string): Element;
  createTextNode(data: string): Node;
}

export function toDom(node: VNode | string, doc: MinimalDocument): Node {
  if (typeof node === "string") {
    return doc.createTextNode(node);
  }
  const el = SVG_TAGS.has(node.tag)
    ? doc.createElementNS(SVG_NS, node.tag)
    : doc.createElement(node.tag);
  for (const [name, value] of Object.entries(node.attrs)) {
    if (name === "checked" || name === "disabled") {
      // presence-only attributes; reflect the property for live inputs
      (el as unknown as Record<string, boolean>)[name] = true;
    }
    el.setAttribute(name, value);
  }
  for (const [event, handler] of Object.entries(node.on)) {
    el.addEventListener(event, (ev: Event) => {
      const target = ev.target as { value?: string } | null;
      handler(target?.value ?? "");
    });
  }
  for (const child of node.children) {
    el.appendChild(toDom(child, doc));
  }
  return el;
}

/** Full re-render: cheap and predictable at this scale. */
export function mount(root: Element, node: VNode, doc: MinimalDocument): void {
  root.replaceChildren(toDom(node, doc));
}
