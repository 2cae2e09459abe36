/**
 * DOM rendering. Pure functions of the store: each route re-renders its
 * view from state, and user actions call back into the store/API. No key
 * material ever enters the browser; the portal shows only API fields.
 */

import { encodeText } from "./api.js";
import { parsePrescription, PortalStore } from "./state.js";
import type { PatientProfile, DoctorProfile, RecordKind } from "./types.js";

type Attrs = Record<string, string>;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

function field(labelText: string, input: HTMLElement): HTMLElement {
  return el("label", { class: "field" }, el("span", {}, labelText), input);
}

function textInput(name: string, type = "text"): HTMLInputElement {
  return el("input", { name, type, id: `input-${name}` });
}

export function renderBanner(store: PortalStore): HTMLElement {
  if (!store.banner) return el("div", { class: "banner empty" });
  return el(
    "div",
    { class: `banner ${store.banner.kind} status-${store.banner.statusClass}` },
    store.banner.text,
  );
}

// -- registration -------------------------------------------------------------

const PATIENT_BASICS: Array<[keyof PatientProfile, string]> = [
  ["first_name", "First Name"],
  ["last_name", "Last Name"],
  ["email", "Email Address"],
  ["gender", "Gender"],
  ["date_of_birth", "Date of Birth"],
  ["phone", "Phone No."],
  ["emergency_email", "Emergency Email"],
];

const DOCTOR_BASICS: Array<[keyof DoctorProfile, string]> = [
  ["first_name", "First Name"],
  ["last_name", "Last Name"],
  ["email", "Email Address"],
  ["phone", "Phone No."],
];

const DOCTOR_PROFESSIONAL: Array<[keyof DctorProfessional, string]> = [
  ["hospital", "Hospital"],
  ["qualification", "Qualification"],
  ["specialization", "Specialization"],
  ["work_experience", "Work Experience"],
  ["current_workplace", "Current Workplace"],
];

type DctorProfessional = Pick<
  DoctorProfile,
  "hospital" | "qualification" | "specialization" | "work_experience" | "current_workplace"
>;

interface RegistrationDraft {
  role: "PATIENT" | "DOCTOR";
  step: number;
  profile: Record<string, string>;
  password: string;
}

export const registrationDraft: RegistrationDraft = {
  role: "PATIENT",
  step: 1,
  profile: {},
  password: "",
};

function collect(form: HTMLElement, names: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (const name of names) {
    const input = form.querySelector<HTMLInputElement>(`[name="${name}"]`);
    out[name] = input?.value ?? "";
  }
  return out;
}

export function renderRegister(root: HTMLElement, store: PortalStore): void {
  const draft = registrationDraft;
  root.replaceChildren();
  root.append(renderBanner(store));
  const heading =
    draft.role === "PATIENT"
      ? `Patient Sign Up — step ${draft.step} of 2`
      : `Doctor Sign Up — step ${draft.step} of 3`;
  const form = el("form", { class: "card", id: "register-form" });
  form.append(el("h2", {}, heading));

  const roleSelect = el("select", { name: "role", id: "register-role" });
  for (const role of ["PATIENT", "DOCTOR"]) {
    const option = el("option", { value: role }, role);
    if (role === draft.role) option.setAttribute("selected", "selected");
    roleSelect.append(option);
  }
  roleSelect.addEventListener("change", () => {
    draft.role = roleSelect.value as "PATIENT" | "DOCTOR";
    draft.step = 1;
    draft.profile = {};
    renderRegister(root, store);
  });

  if (draft.step === 1) {
    form.append(field("Role", roleSelect));
    const basics = draft.role === "PATIENT" ? PATIENT_BASICS : DOCTOR_BASICS;
    for (const [name, label] of basics) form.append(field(label, textInput(name)));
    form.append(field("Password", textInput("password", "password")));
    form.append(el("button", { type: "submit", id: "register-next" }, "Next"));
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const names = basics.map(([name]) => name as string);
      Object.assign(draft.profile, collect(form, names));
      draft.password = collect(form, ["password"])["password"] ?? "";
      draft.step = 2;
      void submitIfReady(root, store);
    });
  } else if (draft.role === "DOCTOR" && draft.step === 2) {
    form.append(el("p", {}, "Provide professional details"));
    for (const [name, label] of DOCTOR_PROFESSIONAL)
      form.append(field(label, textInput(name)));
    form.append(el("button", { type: "submit", id: "register-next" }, "Next"));
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      Object.assign(
        draft.profile,
        collect(form, DOCTOR_PROFESSIONAL.map(([name]) => name as string)),
      );
      draft.step = 3;
      void submitIfReady(root, store);
    });
  } else {
    form.append(el("p", {}, `Verify using the OTP sent to ${draft.profile["email"]}`));
    form.append(field("OTP Code", textInput("code")));
    form.append(el("button", { type: "submit", id: "register-verify" }, "Verify"));
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const code = collect(form, ["code"])["code"] ?? "";
      void store
        .run(() => store.api.verifyOtp(draft.profile["email"] ?? "", code, draft.password))
        .then((verified) => {
          if (verified) {
            store.info(`Account ${verified.email} verified; you can log in now.`);
            draft.step = 1;
            draft.profile = {};
            location.hash = "#/login";
          } else {
            renderRegister(root, store);
          }
        });
    });
  }
  root.append(form);
}

async function submitIfReady(root: HTMLElement, store: PortalStore): Promise<void> {
  const draft = registrationDraft;
  const otpStep = draft.role === "PATIENT" ? 2 : 3;
  if (draft.step === otpStep) {
    const registered = await store.run(() =>
      store.api.register(
        draft.role,
        draft.profile as unknown as PatientProfile & DoctorProfile,
        draft.password,
      ),
    );
    if (!registered) draft.step = otpStep - 1;
  }
  renderRegister(root, store);
}

// -- login ---------------------------------------------------------------------

export function renderLogin(root: HTMLElement, store: PortalStore): void {
  root.replaceChildren();
  root.append(renderBanner(store));
  const form = el("form", { class: "card", id: "login-form" });
  form.append(el("h2", {}, "Log in"));
  form.append(field("Email", textInput("email")));
  form.append(field("Password", textInput("password", "password")));
  form.append(el("button", { type: "submit", id: "login-submit" }, "Log in"));
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const values = collect(form, ["email", "password"]);
    void store.login(values["email"] ?? "", values["password"] ?? "").then((ok) => {
      if (ok) location.hash = "#/dashboard";
    });
  });
  root.append(form, el("p", {}, el("a", { href: "#/register" }, "Create an account")));
}

// -- dashboards ------------------------------------------------------------------

const KINDS: RecordKind[] = ["HISTORY", "LAB", "RADIOLOGY", "VITALS"];

function recordRow(
  store: PortalStore,
  recordId: string,
  kind: string,
  height: number,
  extra: Array<Node | string> = [],
): HTMLElement {
  const row = el(
    "li",
    { class: "record-row", "data-record-id": recordId },
    el("code", {}, recordId.slice(0, 16)),
    el("span", { class: "kind" }, kind),
    el("span", { class: "height" }, `height ${height}`),
    ...extra,
  );
  const view = el("button", { type: "button", class: "view" }, "View");
  view.addEventListener("click", () => {
    void store.run(() => store.api.fetchRecord(recordId)).then((content) => {
      if (!content) return;
      const target = row.querySelector(".content") ?? el("pre", { class: "content" });
      if (content.kind === "PRESCRIPTION") {
        const body = parsePrescription(content.content_b64);
        target.textContent = [
          `VIEWS ON REPORT: ${body.views_on_report}`,
          `SPECIAL CARE: ${body.special_care}`,
          `ALLERGIES: ${body.allergies}`,
          `MEDICINE SUGGESTIONS: ${body.medicine_suggestions}`,
        ].join("\n");
      } else {
        target.textContent = atob(content.content_b64).slice(0, 2000);
      }
      row.append(target);
    });
  });
  row.append(view);
  return row;
}

export function renderPatientDashboard(root: HTMLElement, store: PortalStore): void {
  const dashboard = store.patientDashboard();
  root.replaceChildren();
  root.append(renderBanner(store));
  const page = el("div", { class: "dashboard patient" });
  page.append(el("h2", {}, `Patient portal — ${store.session?.email ?? ""}`));

  const upload = el("form", { class: "card", id: "upload-form" });
  upload.append(el("h3", {}, "Upload record"));
  const kindSelect = el("select", { name: "kind", id: "upload-kind" });
  for (const kind of KINDS) kindSelect.append(el("option", { value: kind }, kind));
  upload.append(field("Kind", kindSelect));
  const content = el("textarea", { name: "content", id: "upload-content" });
  upload.append(field("Content", content));
  upload.append(el("button", { type: "submit", id: "upload-submit" }, "Upload"));
  upload.addEventListener("submit", (event) => {
    event.preventDefault();
    void store
      .run(() =>
        store.api.uploadRecord(
          (kindSelect as HTMLSelectElement).value as RecordKind,
          encodeText((content as HTMLTextAreaElement).value),
        ),
      )
      .then(async (record) => {
        if (record) {
          store.info(`Record ${record.record_id.slice(0, 16)} committed.`);
          await store.refresh();
          renderPatientDashboard(root, store);
        }
      });
  });
  page.append(upload);

  const recordsCard = el("div", { class: "card" }, el("h3", {}, "My records"));
  const recordList = el("ul", { class: "records", id: "patient-records" });
  for (const record of dashboard.records) {
    recordList.append(
      recordRow(store, record.record_id, record.kind, record.created_height),
    );
  }
  recordsCard.append(recordList);
  page.append(recordsCard);

  const grantCard = el("form", { class: "card", id: "grant-form" });
  grantCard.append(el("h3", {}, "Give Access"));
  const recordSelect = el("select", { name: "record_id", id: "grant-record" });
  for (const record of dashboard.records) {
    recordSelect.append(
      el("option", { value: record.record_id }, `${record.kind} ${record.record_id.slice(0, 12)}`),
    );
  }
  grantCard.append(field("Record", recordSelect));
  grantCard.append(field("Doctor email", textInput("doctor_email")));
  grantCard.append(el("button", { type: "submit", id: "grant-submit" }, "Give Access"));
  grantCard.addEventListener("submit", (event) => {
    event.preventDefault();
    const doctor = collect(grantCard, ["doctor_email"])["doctor_email"] ?? "";
    void store
      .run(() => store.api.grantAccess((recordSelect as HTMLSelectElement).value, doctor))
      .then(async (grant) => {
        if (grant) {
          store.info(`Access granted to ${grant.grantee_email}.`);
          await store.refresh();
          renderPatientDashboard(root, store);
        }
      });
  });
  page.append(grantCard);

  const grantsCard = el("div", { class: "card" }, el("h3", {}, "Outgoing grants"));
  const grantList = el("ul", { class: "grants", id: "patient-grants" });
  for (const grant of dashboard.outgoingGrants) {
    const row = el(
      "li",
      { class: `grant-row ${grant.status.toLowerCase()}`, "data-grant-id": grant.grant_id },
      el("code", {}, grant.record_id.slice(0, 12)),
      el("span", {}, grant.grantee_email),
      el("span", { class: "status" }, grant.status),
    );
    if (grant.status === "ACTIVE") {
      const revoke = el("button", { type: "button", class: "revoke" }, "revoke");
      revoke.addEventListener("click", () => {
        void store.run(() => store.api.revokeGrant(grant.grant_id)).then(async (done) => {
          if (done) {
            store.info(`Access revoked from ${grant.grantee_email}.`);
            await store.refresh();
            renderPatientDashboard(root, store);
          }
        });
      });
      row.append(revoke);
    }
    grantList.append(row);
  }
  grantsCard.append(grantList);
  page.append(grantsCard);

  root.append(page);
}

export function renderDoctorDashboard(root: HTMLElement, store: PortalStore): void {
  const dashboard = store.doctorDashboard();
  root.replaceChildren();
  root.append(renderBanner(store));
  const page = el("div", { class: "dashboard doctor" });
  page.append(el("h2", {}, `Doctor portal — ${store.session?.email ?? ""}`));

  const recordsCard = el("div", { class: "card" }, el("h3", {}, "Accessible records"));
  const recordList = el("ul", { class: "records", id: "doctor-records" });
  if (dashboard.accessibleRecords.length === 0) {
    recordList.append(el("li", { class: "empty" }, "No records shared with you yet."));
  }
  for (const record of dashboard.accessibleRecords) {
    recordList.append(
      recordRow(store, record.record_id, record.kind, record.created_height, [
        el("span", { class: "owner" }, record.owner_email),
      ]),
    );
  }
  recordsCard.append(recordList);
  page.append(recordsCard);

  const prescription = el("form", { class: "card", id: "prescription-form" });
  prescription.append(el("h3", {}, "Prescription"));
  prescription.append(field("Patient email", textInput("patient_email")));
  prescription.append(field("Views on report", textInput("views_on_report")));
  prescription.append(field("Special care", textInput("special_care")));
  prescription.append(field("Allergies", textInput("allergies")));
  prescription.append(field("Medicine suggestions", textInput("medicine_suggestions")));
  prescription.append(el("button", { type: "submit", id: "prescription-submit" }, "Submit"));
  prescription.addEventListener("submit", (event) => {
    event.preventDefault();
    const values = collect(prescription, [
      "patient_email",
      "views_on_report",
      "special_care",
      "allergies",
      "medicine_suggestions",
    ]);
    void store
      .run(() =>
        store.api.prescribe({
          patient_email: values["patient_email"] ?? "",
          views_on_report: values["views_on_report"] ?? "",
          special_care: values["special_care"] ?? "",
          allergies: values["allergies"] ?? "",
          medicine_suggestions: values["medicine_suggestions"] ?? "",
        }),
      )
      .then(async (record) => {
        if (record) {
          store.info(`Prescription recorded for ${values["patient_email"]}.`);
          await store.refresh();
          renderDoctorDashboard(root, store);
        }
      });
  });
  page.append(prescription);

  root.append(page);
}

// -- chain explorer -------------------------------------------------------------

export function renderChain(root: HTMLElement, store: PortalStore): void {
  root.replaceChildren();
  root.append(renderBanner(store));
  const page = el("div", { class: "card chain" }, el("h2", {}, "Blockchain Dashboard"));
  const table = el("table", { id: "chain-table" });
  table.append(
    el(
      "tr",
      {},
      ...["Height", "Hash", "Prev hash", "Txs", "Seal", "Timestamp"].map((h) =>
        el("th", {}, h),
      ),
    ),
  );
  page.append(table);
  root.append(page);
  void store.run(() => store.api.chainBlocks()).then((blocks) => {
    if (!blocks) return;
    for (const block of blocks) {
      table.append(
        el(
          "tr",
          { class: "block-row", "data-height": String(block.height) },
          el("td", {}, String(block.height)),
          el("td", {}, el("code", {}, block.hash.slice(0, 16))),
          el("td", {}, el("code", {}, block.prev_hash.slice(0, 16))),
          el("td", {}, String(block.tx_count)),
          el("td", {}, block.seal_type),
          el("td", {}, String(block.timestamp)),
        ),
      );
    }
  });
}
