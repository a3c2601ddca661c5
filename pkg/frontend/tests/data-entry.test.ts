import { describe, expect, it } from "vitest";
import { setSession } from "../src/session";
import {
  INVALID_AADHAAR,
  VALID_AADHAARS,
  fill,
  jsonResponse,
  mountApp,
  routedFetch,
  submit,
  text,
  until,
} from "./support";

function providerSession() {
  setSession({
    token: "p".repeat(64),
    role: "PROVIDER",
    expiresAt: Math.floor(Date.now() / 1000) + 3600,
    accountId: "prov-1",
    hospitalName: "St. Mary",
  });
}

function fillForm(root: HTMLElement, aadhaar: string, date = "2021-06-01") {
  fill(root, "#aadhaar", aadhaar);
  fill(root, "#full_name", "Asha Rao");
  fill(root, "#vaccine_name", "Covaxin");
  fill(root, "#dose_number", "1");
  fill(root, "#date", date);
}

describe("data-entry page", () => {
  it("rejects a failing Verhoeff checksum before any network call", async () => {
    const fetchFn = routedFetch({});
    const { root, app } = mountApp(fetchFn);
    providerSession();
    app.navigate("entry");
    fillForm(root, INVALID_AADHAAR);
    submit(root, "#entry-form");
    await until(() => text(root, '.field-error[data-field="aadhaar"]') !== "");
    expect(text(root, '.field-error[data-field="aadhaar"]')).toContain("Aadhaar");
    expect(fetchFn).not.toHaveBeenCalled();
  });

  it("rejects a future vaccination date locally", async () => {
    const fetchFn = routedFetch({});
    const { root, app } = mountApp(fetchFn);
    providerSession();
    app.navigate("entry");
    fillForm(root, VALID_AADHAARS[0], "2099-01-01");
    submit(root, "#entry-form");
    await until(() => text(root, '.field-error[data-field="date"]') !== "");
    expect(fetchFn).not.toHaveBeenCalled();
  });

  it("submits a valid form, shows the receipt, clears the fields", async () => {
    const fetchFn = routedFetch({
      "POST /records": () => jsonResponse({ accepted: true, position: 0 }, 202),
    });
    const { root, app } = mountApp(fetchFn);
    providerSession();
    app.navigate("entry");
    fillForm(root, VALID_AADHAARS[0]);
    submit(root, "#entry-form");
    await until(() => !root.querySelector<HTMLElement>("#receipt")!.hidden);
    expect(text(root, "#receipt")).toContain("position 0");
    expect(root.querySelector<HTMLInputElement>("#aadhaar")!.value).toBe("");
    expect(fetchFn).toHaveBeenCalledTimes(1);
  });

  it("renders the credential QR on demand after acceptance", async () => {
    const payload = "VAXLEDGER:1:dGVzdA";
    const fetchFn = routedFetch({
      "POST /records": () => jsonResponse({ accepted: true, position: 0 }, 202),
      "GET /credential/": () => jsonResponse({ qr_payload: payload }),
    });
    const { root, app } = mountApp(fetchFn);
    providerSession();
    app.navigate("entry");
    fillForm(root, VALID_AADHAARS[0]);
    submit(root, "#entry-form");
    await until(() => root.querySelector("#show-credential") !== null);
    root.querySelector<HTMLButtonElement>("#show-credential")!.click();
    await until(() => root.querySelector("#qr-image svg") !== null);
    expect(text(root, "#qr-text")).toBe(payload);
  });

  it("maps a DuplicateDose refusal onto the dose field", async () => {
    const fetchFn = routedFetch({
      "POST /records": () =>
        jsonResponse(
          {
            error: "transaction would fail",
            reason: "DuplicateDose",
            detail: "Covaxin dose 1 already recorded",
          },
          400,
        ),
    });
    const { root, app } = mountApp(fetchFn);
    providerSession();
    app.navigate("entry");
    fillForm(root, VALID_AADHAARS[0]);
    submit(root, "#entry-form");
    await until(() => text(root, '.field-error[data-field="dose_number"]') !== "");
    expect(text(root, '.field-error[data-field="dose_number"]')).toContain(
      "already recorded",
    );
  });

  it("redirects to login when the session has expired server-side", async () => {
    const fetchFn = routedFetch({
      "POST /records": () => jsonResponse({ error: "session expired" }, 401),
    });
    const { root, app } = mountApp(fetchFn);
    providerSession();
    app.navigate("entry");
    fillForm(root, VALID_AADHAARS[0]);
    submit(root, "#entry-form");
    await until(() => root.dataset.view === "login");
    expect(root.querySelector("#login-form")).not.toBeNull();
  });

  it("bounces straight to login without a session", () => {
    const { root, app } = mountApp(routedFetch({}));
    app.navigate("entry");
    expect(root.dataset.view).toBe("login");
  });
});
