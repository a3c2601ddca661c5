/** Shared test scaffolding: fixtures, fetch mocks, page drivers. */

import { vi } from "vitest";
import { ApiClient } from "../src/api";
import { createApp } from "../src/app";
import { clearSession } from "../src/session";

// Verhoeff-valid 12-digit numbers (frozen from the server implementation)
export const VALID_AADHAARS = [
  "234123412346",
  "200000000009",
  "200000000013",
  "200000000021",
  "555555555551",
];
// same as VALID_AADHAARS[0] with a wrong check digit
export const INVALID_AADHAAR = "234123412345";

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export type RouteHandler = (url: string, init?: RequestInit) => Response;

/** fetch stub dispatching on "METHOD /path"; records every call it serves. */
export function routedFetch(routes: Record<string, RouteHandler>) {
  const fn = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const key = `${init?.method ?? "GET"} ${path}`;
    for (const [pattern, handler] of Object.entries(routes)) {
      const [method, prefix] = pattern.split(" ");
      if ((init?.method ?? "GET") === method && path.startsWith(prefix)) {
        return handler(url, init);
      }
    }
    throw new Error(`unmocked request: ${key}`);
  });
  return fn as unknown as typeof fetch & ReturnType<typeof vi.fn>;
}

/** Fresh #app root with an app bound to the given fetch implementation. */
export function mountApp(fetchFn: typeof fetch) {
  clearSession();
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app")!;
  const api = new ApiClient("http://node.test", fetchFn);
  const app = createApp(root, api);
  return { root, app, api };
}

export function fill(root: HTMLElement, selector: string, value: string): void {
  const input = root.querySelector<HTMLInputElement | HTMLTextAreaElement>(selector);
  if (!input) throw new Error(`no input matches ${selector}`);
  input.value = value;
}

export function submit(root: HTMLElement, formSelector: string): void {
  const form = root.querySelector<HTMLFormElement>(formSelector);
  if (!form) throw new Error(`no form matches ${formSelector}`);
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

/** Wait until `predicate` holds (micro + macro tasks flushed). */
export async function until(predicate: () => boolean, timeoutMs = 5000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error("condition not reached in time");
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
}

export function text(root: ParentNode, selector: string): string {
  return root.querySelector(selector)?.textContent ?? "";
}
