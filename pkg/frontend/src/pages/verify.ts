/**
 * Officer landing page: traveler verification.
 *
 * Two independent inputs for one traveler: an Aadhaar lookup against the
 * ledger (FOUND / NOT FOUND) and a pasted or scanned QR payload checked by
 * the server (VALID / INVALID_SIGNATURE / EXPIRED / MALFORMED). Every
 * verdict string is rendered verbatim from the API. When both verdicts are
 * present and disagree, the mismatch is highlighted; the officer decides.
 */

import { ApiError, LookupResponse, NetworkError, VerifyStatus } from "../api";
import { clear, el, labeledInput } from "../dom";
import { activeSession, clearSession } from "../session";
import type { AppContext } from "../app";

const STATUS_CLASS: Record<VerifyStatus, string> = {
  VALID: "verdict-green",
  INVALID_SIGNATURE: "verdict-red",
  EXPIRED: "verdict-orange",
  MALFORMED: "verdict-red",
};

export function renderVerify(ctx: AppContext): HTMLElement {
  const session = activeSession();
  if (session === null) {
    ctx.navigate("login");
    return el("div");
  }

  let lookupFound: boolean | null = null;
  let qrStatus: VerifyStatus | null = null;

  const banner = el("div", { class: "banner", role: "alert", hidden: true });
  const lookupVerdict = el("div", { id: "lookup-verdict", class: "verdict", hidden: true });
  const recordPanel = el("div", { id: "record-panel" });
  const qrVerdict = el("div", { id: "qr-verdict", class: "verdict", hidden: true });
  const mismatch = el("div", { id: "mismatch", class: "mismatch", hidden: true });

  function updateMismatch(): void {
    if (lookupFound === null || qrStatus === null) {
      mismatch.hidden = true;
      return;
    }
    const agree = (lookupFound && qrStatus === "VALID") || (!lookupFound && qrStatus !== "VALID");
    mismatch.hidden = agree;
    if (!agree) {
      mismatch.textContent =
        "Ledger lookup and QR credential disagree - inspect both results and decide manually.";
    }
  }

  function fail(err: unknown): void {
    banner.hidden = false;
    if (err instanceof ApiError && err.status === 401) {
      clearSession();
      ctx.navigate("login");
    } else if (err instanceof ApiError && err.status === 403) {
      banner.className = "banner error-banner";
      banner.textContent = "not authorized";
    } else if (err instanceof ApiError) {
      banner.className = "banner error-banner";
      banner.textContent = err.message;
    } else if (err instanceof NetworkError) {
      banner.className = "banner network-banner";
      banner.textContent = "Cannot reach the server.";
    } else {
      throw err;
    }
  }

  const aadhaar = labeledInput("aadhaar", "Aadhaar card number", {
    inputmode: "numeric",
    maxlength: "12",
  });
  const lookupButton = el("button", { type: "submit", text: "Search ledger" });

  async function lookup(): Promise<void> {
    banner.hidden = true;
    lookupButton.disabled = true;
    try {
      const result = await ctx.api.lookupRecord(session!.token, aadhaar.input.value);
      lookupFound = result !== null;
      lookupVerdict.hidden = false;
      lookupVerdict.className = `verdict ${lookupFound ? "verdict-green" : "verdict-grey"}`;
      lookupVerdict.textContent = lookupFound ? "FOUND" : "NOT FOUND";
      clear(recordPanel);
      if (result !== null) recordPanel.append(recordTable(result));
      updateMismatch();
    } catch (err) {
      fail(err);
    } finally {
      lookupButton.disabled = false;
    }
  }

  const qrInput = el("textarea", {
    id: "qr-payload",
    rows: "4",
    placeholder: "Paste the scanned VAXLEDGER:1:... payload",
  });
  const qrButton = el("button", { type: "submit", text: "Check credential" });

  async function checkQr(): Promise<void> {
    banner.hidden = true;
    qrButton.disabled = true;
    try {
      const status = await ctx.api.verify(qrInput.value.trim());
      qrStatus = status;
      qrVerdict.hidden = false;
      qrVerdict.className = `verdict ${STATUS_CLASS[status] ?? "verdict-red"}`;
      qrVerdict.textContent = status; // verbatim from the API
      updateMismatch();
    } catch (err) {
      fail(err);
    } finally {
      qrButton.disabled = false;
    }
  }

  return el("section", { class: "page page-verify" }, [
    el("h1", { text: "Traveler verification" }),
    el("p", { class: "subtitle", text: `Signed in as ${session.accountId}` }),
    banner,
    el("div", { class: "columns" }, [
      el("div", { class: "column" }, [
        el("h2", { text: "Ledger lookup" }),
        el(
          "form",
          {
            id: "lookup-form",
            onSubmit: (event: Event) => {
              event.preventDefault();
              void lookup();
            },
          },
          [aadhaar.wrapper, lookupButton],
        ),
        lookupVerdict,
        recordPanel,
      ]),
      el("div", { class: "column" }, [
        el("h2", { text: "QR credential" }),
        el(
          "form",
          {
            id: "qr-form",
            onSubmit: (event: Event) => {
              event.preventDefault();
              void checkQr();
            },
          },
          [qrInput, qrButton],
        ),
        qrVerdict,
      ]),
    ]),
    mismatch,
  ]);
}

function recordTable(result: LookupResponse): HTMLElement {
  const rows = result.record.entries.map((entry) =>
    el("tr", {}, [
      el("td", { text: entry.vaccine_name }),
      el("td", { text: String(entry.dose_number) }),
      el("td", { text: entry.date }),
      el("td", { text: entry.hospital_name }),
    ]),
  );
  return el("div", {}, [
    el("p", { class: "record-name", text: result.record.full_name }),
    el("table", { class: "record-table" }, [
      el("thead", {}, [
        el("tr", {}, [
          el("th", { text: "Vaccine" }),
          el("th", { text: "Dose" }),
          el("th", { text: "Date" }),
          el("th", { text: "Hospital" }),
        ]),
      ]),
      el("tbody", {}, rows),
    ]),
    el("p", {
      class: "record-height",
      text: `verified against chain height ${result.verified_at_height}`,
    }),
  ]);
}
