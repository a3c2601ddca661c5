/**
 * Authority admin page: register healthcare providers and immigration
 * officers. Each registration creates the login account and queues the
 * matching on-chain role transaction.
 */

import { ApiError, NetworkError } from "../api";
import { el, labeledInput } from "../dom";
import { activeSession, clearSession } from "../session";
import type { AppContext } from "../app";

export function renderAdmin(ctx: AppContext): HTMLElement {
  const session = activeSession();
  if (session === null) {
    ctx.navigate("login");
    return el("div");
  }

  const email = labeledInput("new-email", "Email", { type: "email" });
  const password = labeledInput("new-password", "Password", { type: "password" });
  const hospital = labeledInput("new-hospital", "Hospital name");
  const roleSelect = el("select", { id: "new-role" }, [
    el("option", { value: "PROVIDER", text: "Healthcare provider" }),
    el("option", { value: "OFFICER", text: "Immigration officer" }),
  ]);
  roleSelect.addEventListener("change", () => {
    hospital.wrapper.hidden = roleSelect.value !== "PROVIDER";
  });

  const banner = el("div", { class: "banner", role: "alert", hidden: true });
  const created = el("ul", { id: "created-accounts" });
  const submit = el("button", { type: "submit", text: "Register" });

  async function register(): Promise<void> {
    banner.hidden = true;
    submit.disabled = true;
    try {
      const role = roleSelect.value as "PROVIDER" | "OFFICER";
      const account = await ctx.api.createAccount(session!.token, {
        email: email.input.value,
        password: password.input.value,
        role,
        ...(role === "PROVIDER" ? { hospital_name: hospital.input.value } : {}),
      });
      created.append(
        el("li", {
          text: `${account.role} ${account.account_id} (${account.email})${
            account.hospital_name ? ` at ${account.hospital_name}` : ""
          }`,
        }),
      );
      email.input.value = "";
      password.input.value = "";
      hospital.input.value = "";
    } catch (err) {
      banner.hidden = false;
      if (err instanceof ApiError) {
        if (err.status === 401) {
          clearSession();
          ctx.navigate("login");
          return;
        }
        banner.className = "banner error-banner";
        banner.textContent = err.message;
      } else if (err instanceof NetworkError) {
        banner.className = "banner network-banner";
        banner.textContent = "Cannot reach the server.";
      } else {
        throw err;
      }
    } finally {
      submit.disabled = false;
    }
  }

  return el("section", { class: "page page-admin" }, [
    el("h1", { text: "Authority administration" }),
    el("p", { class: "subtitle", text: `Signed in as ${session.accountId}` }),
    banner,
    el(
      "form",
      {
        id: "admin-form",
        onSubmit: (event: Event) => {
          event.preventDefault();
          void register();
        },
      },
      [
        el("div", { class: "field" }, [el("label", { for: "new-role", text: "Role" }), roleSelect]),
        email.wrapper,
        password.wrapper,
        hospital.wrapper,
        submit,
      ],
    ),
    el("h2", { text: "Registered this session" }),
    created,
  ]);
}
