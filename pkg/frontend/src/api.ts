/**
 * Typed client for the vaxledger node HTTP API.
 *
 * The UI never computes trust locally: verdict strings (VALID, EXPIRED, ...)
 * and error messages are passed through verbatim from API responses.
 */

export type RoleName = "AUTHORITY" | "PROVIDER" | "OFFICER";

export interface LoginResponse {
  token: string;
  role: RoleName;
  expires_at: number;
  account_id: string;
  hospital_name: string | null;
}

export interface VaccinationEntry {
  vaccine_name: string;
  dose_number: number;
  date: string;
  hospital_name: string;
  provider_id: string;
}

export interface PassportRecord {
  subject_key: string;
  full_name: string;
  entries: VaccinationEntry[];
}

export interface LookupResponse {
  record: PassportRecord;
  verified_at_height: number;
}

export interface Receipt {
  accepted: boolean;
  position: number;
}

export interface RecordForm {
  aadhaar: string;
  full_name: string;
  vaccine_name: string;
  dose_number: number;
  date: string;
}

export interface AccountForm {
  email: string;
  password: string;
  role: "PROVIDER" | "OFFICER";
  hospital_name?: string;
}

export interface AccountCreated {
  account_id: string;
  email: string;
  role: RoleName;
  hospital_name: string | null;
  receipt: Receipt;
}

export type VerifyStatus = "VALID" | "INVALID_SIGNATURE" | "EXPIRED" | "MALFORMED";

/** Non-2xx API response; `message` is the server's verbatim error string. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: Record<string, unknown>,
  ) {
    super(typeof body.error === "string" ? body.error : `HTTP ${status}`);
  }

  /** Machine-readable refusal reason for WouldFail responses, e.g. "DuplicateDose". */
  get reason(): string | undefined {
    return typeof this.body.reason === "string" ? this.body.reason : undefined;
  }
}

/** The request never reached the server (offline, refused connection, ...). */
export class NetworkError extends Error {}

export class ApiClient {
  private readonly fetchFn: typeof fetch;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: typeof fetch,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request(
    method: string,
    path: string,
    options: { token?: string; json?: unknown } = {},
  ): Promise<Record<string, unknown>> {
    const headers: Record<string, string> = {};
    if (options.token) headers["Authorization"] = `Bearer ${options.token}`;
    if (options.json !== undefined) headers["Content-Type"] = "application/json";
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers,
        body: options.json !== undefined ? JSON.stringify(options.json) : undefined,
      });
    } catch (err) {
      throw new NetworkError(String(err));
    }
    let body: Record<string, unknown> = {};
    try {
      body = (await response.json()) as Record<string, unknown>;
    } catch {
      // non-JSON body; fall through with the status alone
    }
    if (!response.ok) throw new ApiError(response.status, body);
    return body;
  }

  async login(email: string, password: string): Promise<LoginResponse> {
    return (await this.request("POST", "/auth/login", {
      json: { email, password },
    })) as unknown as LoginResponse;
  }

  async createAccount(token: string, form: AccountForm): Promise<AccountCreated> {
    return (await this.request("POST", "/accounts", {
      token,
      json: form,
    })) as unknown as AccountCreated;
  }

  async submitRecord(token: string, form: RecordForm): Promise<Receipt> {
    return (await this.request("POST", "/records", {
      token,
      json: form,
    })) as unknown as Receipt;
  }

  /** Officer lookup; resolves to null when no record exists (404). */
  async lookupRecord(token: string, aadhaar: string): Promise<LookupResponse | null> {
    try {
      return (await this.request("GET", `/records/${aadhaar}`, {
        token,
      })) as unknown as LookupResponse;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  /** Signed QR payload text for a traveler, or null when absent (404). */
  async credential(token: string, aadhaar: string): Promise<string | null> {
    try {
      const body = await this.request("GET", `/credential/${aadhaar}`, { token });
      return body.qr_payload as string;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  async verify(qrPayload: string): Promise<VerifyStatus> {
    const body = await this.request("POST", "/verify", {
      json: { qr_payload: qrPayload },
    });
    return body.status as VerifyStatus;
  }
}
