/**
 * Provider landing page: vaccination data entry.
 *
 * Client-side checks run before any network call: the Aadhaar number must
 * be 12 digits with a passing Verhoeff checksum, the dose a positive
 * integer, the date not in the future. The hospital name is read-only,
 * taken from the provider's own registration; the server fills it into the
 * issued record regardless of anything the client sends.
 */

import { ApiError, NetworkError, Receipt } from "../api";
import { el, labeledInput } from "../dom";
import { qrSvg } from "../qr";
import { activeSession, clearSession } from "../session";
import { isValidAadhaar } from "../verhoeff";
import type { AppContext } from "../app";

const REASON_FIELD: Record<string, string> = {
  DuplicateDose: "dose_number",
  NameMismatch: "full_name",
  InvalidAadhaar: "aadhaar",
};

export function renderDataEntry(ctx: AppContext): HTMLElement {
  const session = activeSession();
  if (session === null) {
    ctx.navigate("login");
    return el("div");
  }

  const aadhaar = labeledInput("aadhaar", "Aadhaar card number", {
    inputmode: "numeric",
    maxlength: "12",
    placeholder: "12 digits",
  });
  const fullName = labeledInput("full_name", "Name as in registered ID");
  const vaccine = labeledInput("vaccine_name", "Vaccine name");
  const dose = labeledInput("dose_number", "Dose number", { type: "number", min: "1", value: "1" });
  const date = labeledInput("date", "Vaccination date", { type: "date" });
  const fields = { aadhaar, full_name: fullName, vaccine_name: vaccine, dose_number: dose, date };

  const banner = el("div", { class: "banner", role: "alert", hidden: true });
  const receiptPanel = el("div", { id: "receipt", class: "receipt", hidden: true });
  const qrPanel = el("div", { id: "qr-panel", hidden: true });
  const submit = el("button", { type: "submit", text: "Add to ledger" });

  function setFieldError(field: string, message: string): void {
    const target = fields[field as keyof typeof fields];
    if (target) {
      target.error.textContent = message;
    } else {
      banner.hidden = false;
      banner.className = "banner error-banner";
      banner.textContent = message;
    }
  }

  function clearErrors(): void {
    for (const field of Object.values(fields)) field.error.textContent = "";
    banner.hidden = true;
    banner.textContent = "";
  }

  function validate(): boolean {
    clearErrors();
    let ok = true;
    if (!isValidAadhaar(aadhaar.input.value)) {
      setFieldError("aadhaar", "not a valid Aadhaar number (12 digits, checksum)");
      ok = false;
    }
    if (fullName.input.value.trim() === "") {
      setFieldError("full_name", "required");
      ok = false;
    }
    if (vaccine.input.value.trim() === "") {
      setFieldError("vaccine_name", "required");
      ok = false;
    }
    const doseValue = Number(dose.input.value);
    if (!Number.isInteger(doseValue) || doseValue < 1) {
      setFieldError("dose_number", "must be a positive whole number");
      ok = false;
    }
    const today = new Date().toISOString().slice(0, 10);
    if (!/^\d{4}-\d{2}-\d{2}$/.test(date.input.value) || date.input.value > today) {
      setFieldError("date", "must be a past or present date");
      ok = false;
    }
    return ok;
  }

  async function showCredential(issuedAadhaar: string): Promise<void> {
    const payload = await ctx.api.credential(session!.token, issuedAadhaar);
    if (payload === null) return;
    const image = el("div", { id: "qr-image" });
    image.innerHTML = await qrSvg(payload);
    qrPanel.hidden = false;
    qrPanel.replaceChildren(
      el("h2", { text: "Credential QR" }),
      image,
      el("textarea", { id: "qr-text", readonly: true, rows: "4", text: payload }),
    );
  }

  async function submitForm(): Promise<void> {
    if (!validate()) return; // nothing leaves the browser on invalid input
    const form = {
      aadhaar: aadhaar.input.value,
      full_name: fullName.input.value.trim(),
      vaccine_name: vaccine.input.value.trim(),
      dose_number: Number(dose.input.value),
      date: date.input.value,
    };
    submit.disabled = true;
    try {
      const receipt: Receipt = await ctx.api.submitRecord(session!.token, form);
      receiptPanel.hidden = false;
      receiptPanel.replaceChildren(
        el("p", {
          text: `Accepted into the pool at position ${receipt.position}; it will be committed with the next block.`,
        }),
        el("button", {
          type: "button",
          id: "show-credential",
          text: "Show credential QR",
          onClick: () => void showCredential(form.aadhaar),
        }),
      );
      for (const field of Object.values(fields)) field.input.value = "";
      dose.input.value = "1";
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status === 401) {
          clearSession();
          ctx.navigate("login");
          return;
        }
        const field = err.reason ? REASON_FIELD[err.reason] : undefined;
        setFieldError(field ?? "", describeApiError(err));
      } else if (err instanceof NetworkError) {
        banner.hidden = false;
        banner.className = "banner network-banner";
        banner.textContent = "Cannot reach the server; the record was not submitted.";
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
      id: "entry-form",
      onSubmit: (event: Event) => {
        event.preventDefault();
        void submitForm();
      },
    },
    [
      aadhaar.wrapper,
      fullName.wrapper,
      vaccine.wrapper,
      dose.wrapper,
      date.wrapper,
      el("div", { class: "field" }, [
        el("label", { text: "Hospital name" }),
        el("output", {
          id: "hospital",
          class: "readonly",
          text: session.hospitalName ?? "(on record with the authority)",
        }),
      ]),
      submit,
    ],
  );

  return el("section", { class: "page page-entry" }, [
    el("h1", { text: "Vaccination data entry" }),
    el("p", { class: "subtitle", text: `Signed in as ${session.accountId}` }),
    banner,
    form,
    receiptPanel,
    qrPanel,
  ]);
}

function describeApiError(err: ApiError): string {
  const detail = typeof err.body.detail === "string" ? `: ${err.body.detail}` : "";
  return `${err.message}${detail}`;
}
