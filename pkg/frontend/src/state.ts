/**
 * Portal view-model: session plus the two dashboards, derived purely from
 * API responses. Every display element maps to an API field; nothing here
 * touches the DOM, so the logic is unit-testable on its own.
 */

import { ApiClient, ApiError, decodeText } from "./api.js";
import type {
  GrantSummary,
  LoginResponse,
  PrescriptionBody,
  RecordSummary,
} from "./types.js";

export interface PatientDashboard {
  records: RecordSummary[];
  outgoingGrants: GrantSummary[];
  prescriptions: RecordSummary[];
}

export interface DoctorDashboard {
  accessibleRecords: RecordSummary[];
  grants: GrantSummary[];
}

export type Banner = { kind: "error" | "info"; statusClass: string; text: string } | null;

export class PortalStore {
  session: LoginResponse | null = null;
  records: RecordSummary[] = [];
  grants: GrantSummary[] = [];
  banner: Banner = null;
  private listeners: Array<() => void> = [];

  constructor(public api: ApiClient) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** Run an API call, surfacing its error body verbatim in the banner. */
  async run<T>(action: () => Promise<T>): Promise<T | undefined> {
    try {
      const result = await action();
      this.banner = null;
      this.notify();
      return result;
    } catch (error) {
      if (error instanceof ApiError) {
        this.banner = {
          kind: "error",
          statusClass: error.statusClass,
          text: `${error.code}: ${error.message}`,
        };
      } else {
        this.banner = {
          kind: "error",
          statusClass: "server",
          text: String(error),
        };
      }
      this.notify();
      return undefined;
    }
  }

  info(text: string): void {
    this.banner = { kind: "info", statusClass: "info", text };
    this.notify();
  }

  async login(email: string, password: string): Promise<boolean> {
    const session = await this.run(() => this.api.login(email, password));
    if (!session) return false;
    this.session = session;
    await this.refresh();
    return true;
  }

  async logout(): Promise<void> {
    await this.run(() => this.api.logout());
    this.session = null;
    this.records = [];
    this.grants = [];
    this.notify();
  }

  async refresh(): Promise<void> {
    if (!this.session) return;
    const records = await this.run(() => this.api.listRecords());
    const grants = await this.run(() => this.api.listGrants());
    if (records) this.records = records;
    if (grants) this.grants = grants;
    this.notify();
  }

  patientDashboard(): PatientDashboard {
    return {
      records: this.records,
      outgoingGrants: this.grants,
      prescriptions: this.records.filter((r) => r.kind === "PRESCRIPTION"),
    };
  }

  doctorDashboard(): DoctorDashboard {
    return {
      accessibleRecords: this.records,
      grants: this.grants,
    };
  }

  /** Grants that still admit revocation, keyed for the patient's view. */
  activeGrants(): GrantSummary[] {
    return this.grants.filter((g) => g.status === "ACTIVE");
  }
}

export function parsePrescription(contentB64: string): PrescriptionBody {
  return JSON.parse(decodeText(contentB64)) as PrescriptionBody;
}
