/** API schema types, mirroring the service's JSON bodies exactly. */

export type Role = "PATIENT" | "DOCTOR";

export type RecordKind = "HISTORY" | "LAB" | "RADIOLOGY" | "VITALS" | "PRESCRIPTION";

export interface PatientProfile {
  first_name: string;
  last_name: string;
  email: string;
  gender: string;
  date_of_birth: string;
  phone: string;
  emergency_email: string;
}

export interface DoctorProfile {
  first_name: string;
  last_name: string;
  email: string;
  phone: string;
  hospital: string;
  qualification: string;
  specialization: string;
  work_experience: string;
  current_workplace: string;
}

export interface RecordSummary {
  record_id: string;
  owner_email: string;
  owner_public: string;
  kind: RecordKind;
  generation: number;
  created_height: number;
}

export interface RecordContent extends RecordSummary {
  content_b64: string;
}

export interface GrantSummary {
  grant_id: string;
  record_id: string;
  grantee_email: string;
  status: "ACTIVE" | "REVOKED";
  grant_tx_id: string;
  revoke_tx_id: string | null;
}

export interface LoginResponse {
  token: string;
  email: string;
  role: Role;
  expires_at: number;
}

export interface VerifyOtpResponse {
  email: string;
  verified: boolean;
  signing_public: string;
  agreement_public: string;
}

export interface BlockSummary {
  height: number;
  hash: string;
  prev_hash: string;
  timestamp: number;
  tx_count: number;
  seal_type: string;
}

export interface PrescriptionFields {
  patient_email: string;
  views_on_report: string;
  special_care: string;
  allergies: string;
  medicine_suggestions: string;
}

export interface PrescriptionBody {
  doctor: string;
  patient: string;
  views_on_report: string;
  special_care: string;
  allergies: string;
  medicine_suggestions: string;
  written_at: number;
}
