/**
 * View switcher wiring the three pages (plus the authority admin page) to
 * one root element. Protected views bounce to login when the session is
 * missing or expired.
 */

import { ApiClient, RoleName } from "./api";
import { clear } from "./dom";
import { activeSession } from "./session";
import { renderAdmin } from "./pages/admin";
import { renderDataEntry } from "./pages/data-entry";
import { renderLogin } from "./pages/login";
import { renderVerify } from "./pages/verify";

export type View = "login" | "entry" | "verify" | "admin";

export interface AppContext {
  api: ApiClient;
  navigate(view: View): void;
}

export function routeForRole(role: RoleName): View {
  switch (role) {
    case "PROVIDER":
      return "entry";
    case "OFFICER":
      return "verify";
    case "AUTHORITY":
      return "admin";
  }
}

const PROTECTED: Record<View, boolean> = {
  login: false,
  entry: true,
  verify: true,
  admin: true,
};

export function createApp(root: HTMLElement, api: ApiClient): AppContext {
  const ctx: AppContext = {
    api,
    navigate(view: View) {
      if (PROTECTED[view] && activeSession() === null) view = "login";
      clear(root);
      root.append(render(view, ctx));
      root.dataset.view = view;
    },
  };
  return ctx;
}

function render(view: View, ctx: AppContext): HTMLElement {
  switch (view) {
    case "login":
      return renderLogin(ctx);
    case "entry":
      return renderDataEntry(ctx);
    case "verify":
      return renderVerify(ctx);
    case "admin":
      return renderAdmin(ctx);
  }
}
