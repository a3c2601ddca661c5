/**
 * Authentication page. On success routes by role: provider to data entry,
 * officer to verification, authority to the admin page. API errors are
 * shown verbatim (the server sends one indistinguishable message for
 * unknown email and wrong password); network failures get a retry banner.
 */

import { ApiError, NetworkError } from "../api";
import { el, labeledInput } from "../dom";
import { setSession } from "../session";
import type { AppContext } from "../app";
import { routeForRole } from "../app";

export function renderLogin(ctx: AppContext): HTMLElement {
  const email = labeledInput("email", "Email", { type: "email", autocomplete: "username" });
  const password = labeledInput("password", "Password", { type: "password" });
  const banner = el("div", { class: "banner", role: "alert", hidden: true });
  const submit = el("button", { type: "submit", text: "Sign in" });

  async function attempt(): Promise<void> {
    banner.hidden = true;
    banner.textContent = "";
    submit.disabled = true;
    try {
      const response = await ctx.api.login(email.input.value, password.input.value);
      setSession({
        token: response.token,
        role: response.role,
        expiresAt: response.expires_at,
        accountId: response.account_id,
        hospitalName: response.hospital_name,
      });
      ctx.navigate(routeForRole(response.role));
    } catch (err) {
      banner.hidden = false;
      if (err instanceof ApiError) {
        banner.className = "banner error-banner";
        banner.textContent = err.message; // verbatim API error string
      } else if (err instanceof NetworkError) {
        banner.className = "banner network-banner";
        banner.textContent = "Cannot reach the server. ";
        banner.append(el("button", { type: "button", text: "Retry", onClick: () => void attempt() }));
      } else {
        throw err;
      }
    } finally {
      submit.disabled = false;
    }
  }

  const form = el(
    "form",
    {
      id: "login-form",
      onSubmit: (event: Event) => {
        event.preventDefault();
        void attempt();
      },
    },
    [email.wrapper, password.wrapper, submit],
  );

  return el("section", { class: "page page-login" }, [
    el("h1", { text: "vaxledger" }),
    el("p", { class: "subtitle", text: "Sign in with the credentials issued at registration" }),
    banner,
    form,
  ]);
}
