/**
 * Typed API client. Pure fetch wrapper: the portal holds a bearer token
 * and never any key material. Error bodies are surfaced verbatim.
 */

import type {
  BlockSummary,
  DoctorProfile,
  GrantSummary,
  LoginResponse,
  PatientProfile,
  PrescriptionFields,
  RecordContent,
  RecordKind,
  RecordSummary,
  Role,
  VerifyOtpResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Coarse class used for styling: auth | forbidden | not_found | conflict | validation | server. */
  get statusClass(): string {
    if (this.status === 401) return "auth";
    if (this.status === 403) return "forbidden";
    if (this.status === 404) return "not_found";
    if (this.status === 409) return "conflict";
    if (this.status >= 500) return "server";
    return "validation";
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "error";
  let message = response.statusText;
  try {
    const body = await response.json();
    const detail = body?.detail;
    if (detail && typeof detail === "object") {
      code = detail.code ?? code;
      message = detail.message ?? message;
    } else if (typeof detail === "string") {
      message = detail;
    } else if (Array.isArray(detail)) {
      code = "validation";
      message = detail.map((d: { msg?: string }) => d.msg ?? "invalid").join("; ");
    }
  } catch {
    // keep the status text
  }
  throw new ApiError(response.status, code, message);
}

export class ApiClient {
  token: string | null = null;

  constructor(
    public baseUrl: string = "",
    private fetchImpl: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  register(role: Role, profile: PatientProfile | DoctorProfile, password: string) {
    return this.request<{ email: string; role: Role; verified: boolean }>(
      "POST",
      "/register",
      { role, profile, password },
    );
  }

  verifyOtp(email: string, code: string, password: string) {
    return this.request<VerifyOtpResponse>("POST", "/verify-otp", {
      email,
      code,
      password,
    });
  }

  async login(email: string, password: string): Promise<LoginResponse> {
    const session = await this.request<LoginResponse>("POST", "/login", {
      email,
      password,
    });
    this.token = session.token;
    return session;
  }

  async logout(): Promise<void> {
    await this.request<{ ok: boolean }>("POST", "/logout");
    this.token = null;
  }

  uploadRecord(kind: RecordKind, contentB64: string) {
    return this.request<RecordSummary>("POST", "/records", {
      kind,
      content_b64: contentB64,
    });
  }

  async listRecords(): Promise<RecordSummary[]> {
    const body = await this.request<{ records: RecordSummary[] }>("GET", "/records");
    return body.records;
  }

  fetchRecord(recordId: string) {
    return this.request<RecordContent>("GET", `/records/${recordId}`);
  }

  async listGrants(): Promise<GrantSummary[]> {
    const body = await this.request<{ grants: GrantSummary[] }>("GET", "/grants");
    return body.grants;
  }

  grantAccess(recordId: string, doctorEmail: string) {
    return this.request<GrantSummary>("POST", "/grants", {
      record_id: recordId,
      doctor_email: doctorEmail,
    });
  }

  revokeGrant(grantId: string) {
    return this.request<GrantSummary>("DELETE", `/grants/${grantId}`);
  }

  prescribe(fields: PrescriptionFields) {
    return this.request<RecordSummary>("POST", "/prescriptions", fields);
  }

  async chainBlocks(): Promise<BlockSummary[]> {
    const body = await this.request<{ blocks: BlockSummary[] }>("GET", "/chain/blocks");
    return body.blocks;
  }

  chainBlock(height: number) {
    return this.request<Record<string, unknown>>("GET", `/chain/blocks/${height}`);
  }

  /** Available only when the service runs with --debug-otp (test drives). */
  async debugOtp(email: string): Promise<string> {
    const body = await this.request<{ email: string; code: string }>(
      "GET",
      `/debug/otp/${encodeURIComponent(email)}`,
    );
    return body.code;
  }
}

export function encodeText(text: string): string {
  const bytes = new TextEncoder().encode(text);
  let binary = "";
  for (const byte of bytes) binary += String.fromCharCode(byte);
  return btoa(binary);
}

export function decodeText(contentB64: string): string {
  const binary = atob(contentB64);
  const bytes = Uint8Array.from(binary, (ch) => ch.charCodeAt(0));
  return new TextDecoder().decode(bytes);
}
