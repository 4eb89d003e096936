// Screens as pure functions: (fetched state) -> HTML string. No screen keeps
// anything the API cannot hand back, so rendering twice from the same
// responses yields byte-identical markup.

import { hrefFor, homeFor } from "./router.js";
import type { SessionState } from "./session.js";
import type {
  Account,
  Booking,
  BookingStatus,
  Credit,
  DoctorListing,
  HistoryEntry,
  ReviewComposite,
  ServiceSettings,
  Slot,
} from "./types.js";
import { BOOKING_ACTIONS, HISTORY_CATEGORIES, PRESCRIBABLE } from "./types.js";

export function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export interface Transient {
  error?: { type: string; message: string };
  values?: Record<string, string>;
  flash?: string;
}

function errorBox(t?: Transient): string {
  if (!t?.error) return "";
  return `<p class="error" data-error-type="${esc(t.error.type)}">${esc(t.error.message)}</p>`;
}

function flashBox(t?: Transient): string {
  if (!t?.flash) return "";
  return `<p class="flash">${esc(t.flash)}</p>`;
}

function val(t: Transient | undefined, field: string): string {
  return esc(t?.values?.[field] ?? "");
}

export function layout(
  session: SessionState | null,
  title: string,
  body: string,
): string {
  const links: string[] = [];
  if (!session) {
    links.push(`<a href="${hrefFor("login")}">Sign in</a>`);
    links.push(`<a href="${hrefFor("register-patient")}">Register as patient</a>`);
    links.push(`<a href="${hrefFor("register-doctor")}">Register as doctor</a>`);
  } else if (session.role === "Admin") {
    links.push(`<a href="${hrefFor("admin-pending")}">Approval queue</a>`);
  } else if (session.role === "Doctor") {
    links.push(`<a href="${hrefFor("doctor-bookings")}">Booking requests</a>`);
    links.push(`<a href="${hrefFor("doctor-service")}">Service settings</a>`);
  } else {
    links.push(`<a href="${hrefFor("patient-bookings")}">My bookings</a>`);
    links.push(`<a href="${hrefFor("patient-doctors")}">Find a doctor</a>`);
    links.push(`<a href="${hrefFor("patient-history")}">My history</a>`);
  }
  const logout = session
    ? `<form data-action="logout" class="inline"><button type="submit">Sign out</button></form>`
    : "";
  return [
    `<header><h1><a href="${homeFor(session?.role ?? null)}">MediRelay</a></h1>`,
    `<nav>${links.join(" ")}</nav>${logout}</header>`,
    `<main><h2>${esc(title)}</h2>${body}</main>`,
  ].join("\n");
}

// -- account screens ------------------------------------------------------------

export function loginView(t?: Transient): string {
  return `${flashBox(t)}${errorBox(t)}
<form data-action="login">
  <label>Email <input name="email" type="email" required value="${val(t, "email")}"></label>
  <label>Password <input name="password" type="password" required></label>
  <button type="submit">Sign in</button>
</form>
<p>New here? <a href="${hrefFor("register-patient")}">Register as a patient</a>
or <a href="${hrefFor("register-doctor")}">as a doctor</a>.</p>`;
}

export function registerView(kind: "doctor" | "patient", t?: Transient): string {
  const specialty =
    kind === "doctor"
      ? `<label>Specialty <input name="specialty" required value="${val(t, "specialty")}"></label>`
      : "";
  return `${errorBox(t)}
<form data-action="register-${kind}">
  <label>Email <input name="email" type="email" required value="${val(t, "email")}"></label>
  <label>Full name <input name="name" required value="${val(t, "name")}"></label>
  ${specialty}
  <button type="submit">Register</button>
</form>`;
}

export function registeredView(): string {
  return `<p>Thanks for registering. Check your email for the activation link,
then set your password to finish.</p>
<p><a href="${hrefFor("login")}">Back to sign in</a></p>`;
}

export function activateView(token: string, t?: Transient): string {
  return `${errorBox(t)}
<form data-action="activate">
  <input type="hidden" name="token" value="${esc(token)}">
  <label>Choose a password <input name="password" type="password" required></label>
  <button type="submit">Activate account</button>
</form>`;
}

export function welcomeView(): string {
  return `<p>Your account is active. Welcome to MediRelay.</p>
<p><a href="${hrefFor("login")}">Sign in</a> to continue. Doctors are listed
to patients once an administrator approves the registration.</p>`;
}

// -- admin ------------------------------------------------------------------------

export function adminPendingView(pending: Account[], t?: Transient): string {
  if (pending.length === 0) {
    return `${flashBox(t)}${errorBox(t)}<p>No doctors are waiting for approval.</p>`;
  }
  const rows = pending
    .map(
      (a) => `<tr data-account="${esc(a.account_id)}">
  <td>${esc(a.profile.name ?? "")}</td>
  <td>${esc(a.email)}</td>
  <td>${esc(a.profile.specialty ?? "")}</td>
  <td>
    <form data-action="decide-doctor" class="inline">
      <input type="hidden" name="doctor_id" value="${esc(a.account_id)}">
      <button type="submit" name="decision" value="Approve">Approve</button>
      <button type="submit" name="decision" value="Delete">Delete</button>
    </form>
  </td>
</tr>`,
    )
    .join("\n");
  return `${flashBox(t)}${errorBox(t)}
<table>
  <thead><tr><th>Name</th><th>Email</th><th>Specialty</th><th>Decision</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

// -- doctor ------------------------------------------------------------------------

export function serviceView(settings: ServiceSettings, t?: Transient): string {
  const lines = settings.offerings
    .map((o) => `${o.weekday} ${o.slot_start} ${o.slot_length} ${o.cost}`)
    .join("\n");
  return `${flashBox(t)}${errorBox(t)}
<p>One slot per line: weekday (0 = Monday), start time, length in minutes,
cost in credit.</p>
<form data-action="save-service">
  <label><input type="checkbox" name="enabled" ${settings.enabled ? "checked" : ""}>
  Service enabled (patients can book)</label>
  <label>Weekly slots
  <textarea name="offerings" rows="8">${esc(lines)}</textarea></label>
  <button type="submit">Save service settings</button>
</form>`;
}

function bookingRow(b: Booking, detail: boolean): string {
  const link = detail
    ? `<a href="${hrefFor("doctor-booking-detail", { id: b.booking_id })}">${esc(b.booking_id)}</a>`
    : esc(b.booking_id);
  return `<tr data-booking="${esc(b.booking_id)}">
  <td>${link}</td><td>${esc(b.date)} ${esc(b.slot_start)}</td>
  <td>${esc(b.cost)}</td>
  <td><span class="status">${esc(b.status)}</span></td>
  <td>${b.prescription ? esc(b.prescription) : ""}</td>
</tr>`;
}

export function doctorBookingsView(bookings: Booking[], t?: Transient): string {
  if (bookings.length === 0) {
    return `${flashBox(t)}<p>No booking requests yet.</p>`;
  }
  const rows = bookings.map((b) => bookingRow(b, true)).join("\n");
  return `${flashBox(t)}
<table>
  <thead><tr><th>Request</th><th>Slot</th><th>Cost</th><th>Status</th><th>Prescription</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

export function doctorBookingDetailView(
  booking: Booking,
  review: ReviewComposite,
  t?: Transient,
): string {
  const actions = BOOKING_ACTIONS[booking.status as BookingStatus]
    .map(
      (next) =>
        `<button type="submit" name="status" value="${esc(next)}">${esc(next)}</button>`,
    )
    .join(" ");
  const statusForm = actions
    ? `<form data-action="set-status" class="inline">
  <input type="hidden" name="booking_id" value="${esc(booking.booking_id)}">
  ${actions}
</form>`
    : `<p>No further status changes are possible for a ${esc(booking.status)} booking.</p>`;
  const prescriptionForm = PRESCRIBABLE.includes(booking.status as BookingStatus)
    ? `<form data-action="prescribe">
  <input type="hidden" name="booking_id" value="${esc(booking.booking_id)}">
  <label>Prescription <textarea name="prescription" rows="3">${esc(booking.prescription ?? "")}</textarea></label>
  <button type="submit">Save prescription</button>
</form>`
    : `<p>Prescriptions can be added once the booking is accepted.</p>`;
  const basic = Object.entries(review.patient.basic_info)
    .map(([k, v]) => `<li>${esc(k)}: ${esc(v)}</li>`)
    .join("");
  const history = HISTORY_CATEGORIES.map((cat) => {
    const entries = review.history[cat] ?? [];
    const items = entries.map(([text]) => `<li>${esc(text)}</li>`).join("");
    return `<section data-category="${esc(cat)}"><h4>${esc(cat)}</h4><ul>${items}</ul></section>`;
  }).join("\n");
  return `${flashBox(t)}${errorBox(t)}
<dl>
  <dt>Patient</dt><dd>${esc(review.patient.profile.name ?? "")} (${esc(review.patient.email)})</dd>
  <dt>Slot</dt><dd>${esc(review.slot.date)} ${esc(review.slot.slot_start)} (${esc(review.slot.slot_length)} min)</dd>
  <dt>Status</dt><dd><span class="status">${esc(booking.status)}</span></dd>
  <dt>Cost</dt><dd>${esc(booking.cost)} credit</dd>
</dl>
${statusForm}
${prescriptionForm}
<h3>Basic information</h3><ul>${basic}</ul>
<h3>Medical history</h3>
${history}`;
}

// -- patient -----------------------------------------------------------------------

export function patientDoctorsView(
  q: string,
  doctors: DoctorListing[],
  t?: Transient,
): string {
  const rows = doctors
    .map(
      (d) => `<tr data-doctor="${esc(d.account_id)}">
  <td>${esc(d.profile.name ?? "")}</td>
  <td>${esc(d.profile.specialty ?? "")}</td>
  <td><a href="${hrefFor("patient-book", { doctorId: d.account_id })}">Book now</a></td>
</tr>`,
    )
    .join("\n");
  const table = doctors.length
    ? `<table>
  <thead><tr><th>Doctor</th><th>Specialty</th><th></th></tr></thead>
  <tbody>${rows}</tbody>
</table>`
    : `<p>No doctors match.</p>`;
  return `${flashBox(t)}
<form data-action="search-doctors">
  <label>Name or specialty <input name="q" value="${esc(q)}"></label>
  <button type="submit">Search</button>
</form>
${table}`;
}

export function patientBookView(
  doctor: DoctorListing,
  slots: Slot[],
  balance: number,
  t?: Transient,
): string {
  const rows = slots
    .map((s) => {
      const affordable = balance >= s.cost;
      const button = affordable
        ? `<button type="submit">Book this slot</button>`
        : `<button type="submit" disabled>Book this slot</button>
       <span class="note">needs ${esc(s.cost)} credit, balance is ${esc(balance)}</span>`;
      return `<tr>
  <td>${esc(s.date)}</td><td>${esc(s.slot_start)}</td>
  <td>${esc(s.slot_length)} min</td><td>${esc(s.cost)}</td>
  <td>
    <form data-action="book" class="inline">
      <input type="hidden" name="doctor_id" value="${esc(doctor.account_id)}">
      <input type="hidden" name="date" value="${esc(s.date)}">
      <input type="hidden" name="slot_start" value="${esc(s.slot_start)}">
      ${button}
    </form>
  </td>
</tr>`;
    })
    .join("\n");
  const table = slots.length
    ? `<table>
  <thead><tr><th>Date</th><th>Start</th><th>Length</th><th>Cost</th><th></th></tr></thead>
  <tbody>${rows}</tbody>
</table>`
    : `<p>No open slots in the next two weeks.</p>`;
  return `${flashBox(t)}${errorBox(t)}
<p>Booking with ${esc(doctor.profile.name ?? doctor.account_id)}
(${esc(doctor.profile.specialty ?? "")}). Your balance: ${esc(balance)} credit.</p>
${table}`;
}

export function patientBookingsView(
  bookings: Booking[],
  credit: Credit,
  t?: Transient,
): string {
  const rows = bookings.map((b) => bookingRow(b, false)).join("\n");
  const table = bookings.length
    ? `<table>
  <thead><tr><th>Booking</th><th>Slot</th><th>Cost</th><th>Status</th><th>Prescription</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`
    : `<p>No bookings yet. <a href="${hrefFor("patient-doctors")}">Find a doctor</a>.</p>`;
  return `${flashBox(t)}${errorBox(t)}
${table}
<p>Credit balance: <span data-balance>${esc(credit.balance)}</span></p>
<form data-action="topup" class="inline">
  <label>Add credit <input name="amount" type="number" min="1" required></label>
  <button type="submit">Top up</button>
</form>`;
}

export function patientHistoryView(
  categories: Record<string, HistoryEntry[]>,
  basicInfo: Record<string, string>,
  t?: Transient,
): string {
  const basicRows = Object.entries(basicInfo)
    .map(([k, v]) => `<li>${esc(k)}: ${esc(v)}</li>`)
    .join("");
  const sections = HISTORY_CATEGORIES.map((cat) => {
    const entries = categories[cat] ?? [];
    const items = entries.map((e) => `<li>${esc(e.entry)}</li>`).join("");
    return `<section data-category="${esc(cat)}">
  <h4>${esc(cat)}</h4>
  <ul>${items}</ul>
  <form data-action="add-history" class="inline">
    <input type="hidden" name="category" value="${esc(cat)}">
    <label>Add entry <input name="entry" required></label>
    <button type="submit">Add</button>
  </form>
</section>`;
  }).join("\n");
  return `${flashBox(t)}${errorBox(t)}
<h3>Basic information</h3>
<ul>${basicRows}</ul>
<form data-action="save-basic-info">
  <label>Field <input name="field" placeholder="blood type" required></label>
  <label>Value <input name="value" placeholder="O+" required></label>
  <button type="submit">Save</button>
</form>
<h3>History</h3>
${sections}`;
}
