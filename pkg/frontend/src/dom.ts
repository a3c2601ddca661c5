/** Tiny DOM builder helpers; no framework, just typed createElement sugar. */

type Attrs = Record<string, string | boolean | number | EventListener>;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key.startsWith("on") && typeof value === "function") {
      node.addEventListener(key.slice(2).toLowerCase(), value as EventListener);
    } else if (key === "class") {
      node.className = String(value);
    } else if (key === "text") {
      node.textContent = String(value);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, String(value));
    }
  }
  for (const child of children) {
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export function labeledInput(
  id: string,
  label: string,
  attrs: Attrs = {},
): { wrapper: HTMLDivElement; input: HTMLInputElement; error: HTMLElement } {
  const input = el("input", { id, name: id, ...attrs });
  const error = el("span", { class: "field-error", "data-field": id });
  const wrapper = el("div", { class: "field" }, [
    el("label", { for: id, text: label }),
    input,
    error,
  ]);
  return { wrapper, input, error };
}
