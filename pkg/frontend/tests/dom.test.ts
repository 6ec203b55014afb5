import { describe, expect, it } from "vitest";

import { mount, toDom, type MinimalDocument } from "../src/dom";
import { h } from "../src/render";

interface FakeNode {
  kind: "element" | "text";
  tag?: string;
  ns?: string;
  data?: string;
  attrs: Record<string, string>;
  props: Record<string, unknown>;
  children: FakeNode[];
  listeners: Record<string, (ev: unknown) => void>;
}

function fakeDocument(): MinimalDocument {
  const element = (tag: string, ns?: string): FakeNode => {
    const node: FakeNode = {
      kind: "element",
      tag,
      ns,
      attrs: {},
      props: {},
      children: [],
      listeners: {},
    };
    const asElement = node as unknown as Record<string, unknown>;
    asElement.setAttribute = (name: string, value: string) => {
      node.attrs[name] = value;
    };
    asElement.appendChild = (child: FakeNode) => {
      node.children.push(child);
    };
    asElement.addEventListener = (event: string, fn: (ev: unknown) => void) => {
      node.listeners[event] = fn;
    };
    asElement.replaceChildren = (...kids: FakeNode[]) => {
      node.children = kids;
    };
    return new Proxy(node, {
      set(target, prop, value) {
        if (typeof prop === "string" && !(prop in target)) {
          target.props[prop] = value;
          return true;
        }
        return Reflect.set(target, prop, value);
      },
    });
  };
  return {
    createElement: (tag: string) => element(tag) as unknown as Element,
    createElementNS: (ns: string, tag: string) => element(tag, ns) as unknown as Element,
    createTextNode: (data: string) =>
      ({ kind: "text", data, attrs: {}, props: {}, children: [], listeners: {} }) as unknown as Node,
  };
}

describe("toDom", () => {
  it("builds elements, attributes and nested text", () => {
    const doc = fakeDocument();
    const node = toDom(
      h("div", { class: "box" }, h("span", {}, "hi"), "there"),
      doc,
    ) as unknown as FakeNode;
    expect(node.tag).toBe("div");
    expect(node.attrs.class).toBe("box");
    expect(node.children[0].tag).toBe("span");
    expect(node.children[0].children[0].data).toBe("hi");
    expect(node.children[1].data).toBe("there");
  });

  it("creates svg subtrees in the svg namespace", () => {
    const doc = fakeDocument();
    const node = toDom(
      h("svg", {}, h("circle", { cx: 1, cy: 2, r: 3 })),
      doc,
    ) as unknown as FakeNode;
    expect(node.ns).toBe("http://www.w3.org/2000/svg");
    expect(node.children[0].ns).toBe("http://www.w3.org/2000/svg");
    expect(node.children[0].attrs.cx).toBe("1");
  });

  it("forwards the event target value to handlers", () => {
    const doc = fakeDocument();
    const seen: string[] = [];
    const node = toDom(
      h("input", { onchange: (value: string) => seen.push(value) }),
      doc,
    ) as unknown as FakeNode;
    node.listeners.change({ target: { value: "https://api" } });
    node.listeners.change({ target: null });
    expect(seen).toEqual(["https://api", ""]);
  });

  it("reflects checked and disabled as live properties", () => {
    const doc = fakeDocument();
    const node = toDom(
      h("input", { type: "radio", checked: true }),
      doc,
    ) as unknown as FakeNode;
    expect(node.attrs.checked).toBe("");
    expect(node.props.checked).toBe(true);
  });

  it("mount replaces the root's children", () => {
    const doc = fakeDocument();
    const root = doc.createElement("div");
    mount(root, h("p", {}, "one"), doc);
    mount(root, h("p", {}, "two"), doc);
    const fake = root as unknown as FakeNode;
    expect(fake.children).toHaveLength(1);
    expect(fake.children[0].children[0].data).toBe("two");
  });
});
