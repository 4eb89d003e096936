// Screen loaders and form actions. Loaders fetch everything a screen shows;
// actions wait for the API and then navigate, so the next render starts from
// server truth (no optimistic updates anywhere).

import { Api, ApiError } from "./api.js";
import type { Parsed } from "./router.js";
import { homeFor, hrefFor } from "./router.js";
import type { SessionStore } from "./session.js";
import type { BookingStatus, HistoryEntry, Offering } from "./types.js";
import { HISTORY_CATEGORIES } from "./types.js";
import {
  activateView,
  adminPendingView,
  doctorBookingDetailView,
  doctorBookingsView,
  layout,
  loginView,
  patientBookView,
  patientBookingsView,
  patientDoctorsView,
  patientHistoryView,
  registerView,
  registeredView,
  serviceView,
  welcomeView,
  type Transient,
} from "./views.js";

export interface Ctx {
  api: Api;
  session: SessionStore;
  today: () => Date;
}

export function makeCtx(api: Api, session: SessionStore, today?: () => Date): Ctx {
  return { api, session, today: today ?? (() => new Date()) };
}

export type LoadResult =
  | { kind: "html"; html: string }
  | { kind: "redirect"; hash: string };

export type ActionResult =
  | { kind: "navigate"; hash: string }
  | { kind: "form-error"; error: { type: string; message: string }; values: Record<string, string> };

const FLASH_TEXT: Record<string, string> = {
  activated: "Your account is active. Sign in with your new password.",
  saved: "Service settings saved.",
  booked: "Booking requested. The doctor will confirm it.",
  "slot-taken": "That slot was just taken; the list below is refreshed.",
  "topped-up": "Credit added.",
  prescribed: "Prescription saved.",
  "signed-out": "You are signed out.",
  "session-expired": "Your session ended; sign in again.",
};

function transientFrom(parsed: Parsed): Transient {
  const flashKey = parsed.query.flash;
  return flashKey ? { flash: FLASH_TEXT[flashKey] ?? flashKey } : {};
}

function isoDate(d: Date): string {
  return d.toISOString().slice(0, 10);
}

export function parseOfferings(text: string): Offering[] {
  const offerings: Offering[] = [];
  for (const rawLine of text.split("\n")) {
    const line = rawLine.trim();
    if (!line) continue;
    const parts = line.split(/\s+/);
    if (parts.length !== 4) {
      throw new Error(
        `bad slot line "${line}": expected "weekday start length cost"`,
      );
    }
    const [weekday, slotStart, slotLength, cost] = parts;
    if (!/^[0-6]$/.test(weekday)) {
      throw new Error(`bad weekday in "${line}": use 0 (Monday) to 6 (Sunday)`);
    }
    if (!/^\d{2}:\d{2}$/.test(slotStart)) {
      throw new Error(`bad start time in "${line}": use HH:MM`);
    }
    if (!/^\d+$/.test(slotLength) || !/^\d+$/.test(cost)) {
      throw new Error(`bad numbers in "${line}": length and cost are integers`);
    }
    offerings.push({
      weekday: Number(weekday),
      slot_start: slotStart,
      slot_length: Number(slotLength),
      cost: Number(cost),
    });
  }
  return offerings;
}

export async function loadScreen(
  ctx: Ctx,
  parsed: Parsed,
  transient?: Transient,
): Promise<LoadResult> {
  const session = ctx.session.get();
  const { route, params, query } = parsed;
  if (route.role && session?.role !== route.role) {
    return { kind: "redirect", hash: session ? homeFor(session.role) : hrefFor("login") };
  }
  const t: Transient = { ...transientFrom(parsed), ...(transient ?? {}) };

  try {
    switch (route.name) {
      case "login":
        return html(loginView(t));
      case "register-doctor":
        return html(registerView("doctor", t));
      case "register-patient":
        return html(registerView("patient", t));
      case "registered":
        return html(registeredView());
      case "activate":
        return html(activateView(params.token, t));
      case "welcome":
        return html(welcomeView());
      case "admin-pending": {
        const { pending } = await ctx.api.pendingDoctors();
        return html(adminPendingView(pending, t));
      }
      case "doctor-service": {
        const settings = await ctx.api.getService(session!.accountId);
        return html(serviceView(settings, t));
      }
      case "doctor-bookings": {
        const { bookings } = await ctx.api.listBookings();
        return html(doctorBookingsView(bookings, t));
      }
      case "doctor-booking-detail": {
        const { bookings } = await ctx.api.listBookings();
        const booking = bookings.find((b) => b.booking_id === params.id);
        if (!booking) {
          return { kind: "redirect", hash: hrefFor("doctor-bookings") };
        }
        const review = await ctx.api.reviewBooking(params.id);
        return html(doctorBookingDetailView(booking, review, t));
      }
      case "patient-doctors": {
        const q = query.q ?? "";
        const { doctors } = await ctx.api.searchDoctors(q);
        return html(patientDoctorsView(q, doctors, t));
      }
      case "patient-book": {
        const { doctors } = await ctx.api.searchDoctors("");
        const doctor = doctors.find((d) => d.account_id === params.doctorId);
        if (!doctor) {
          return { kind: "redirect", hash: hrefFor("patient-doctors") };
        }
        const from = isoDate(ctx.today());
        const until = new Date(ctx.today().getTime() + 14 * 86400_000);
        const [{ slots }, credit] = await Promise.all([
          ctx.api.slots(doctor.account_id, from, isoDate(until)),
          ctx.api.credit(session!.accountId),
        ]);
        return html(patientBookView(doctor, slots, credit.balance, t));
      }
      case "patient-bookings": {
        const [{ bookings }, credit] = await Promise.all([
          ctx.api.listBookings(),
          ctx.api.credit(session!.accountId),
        ]);
        return html(patientBookingsView(bookings, credit, t));
      }
      case "patient-history": {
        const categories: Record<string, HistoryEntry[]> = {};
        for (const cat of HISTORY_CATEGORIES) {
          categories[cat] = (await ctx.api.getHistory(session!.accountId, cat)).entries;
        }
        const { basic_info } = await ctx.api.getBasicInfo(session!.accountId);
        return html(patientHistoryView(categories, basic_info, t));
      }
      default:
        return { kind: "redirect", hash: hrefFor("login") };
    }
  } catch (exc) {
    if (exc instanceof ApiError && exc.status === 401) {
      ctx.session.clear();
      ctx.api.token = null;
      return {
        kind: "redirect",
        hash: `${hrefFor("login")}?flash=session-expired`,
      };
    }
    throw exc;
  }

  function html(body: string): LoadResult {
    return { kind: "html", html: layout(session, route.title, body) };
  }
}

export async function runAction(
  ctx: Ctx,
  action: string,
  fields: Record<string, string>,
): Promise<ActionResult> {
  const session = ctx.session.get();
  try {
    switch (action) {
      case "login": {
        const result = await ctx.api.login(fields.email, fields.password);
        ctx.session.set({
          token: result.token,
          accountId: result.account_id,
          role: result.role,
        });
        return nav(homeFor(result.role));
      }
      case "logout": {
        try {
          await ctx.api.logout();
        } catch {
          // A dead token signs out all the same.
        }
        ctx.session.clear();
        ctx.api.token = null;
        return nav(`${hrefFor("login")}?flash=signed-out`);
      }
      case "register-doctor": {
        await ctx.api.registerDoctor(fields.email, {
          name: fields.name,
          specialty: fields.specialty,
        });
        return nav(hrefFor("registered"));
      }
      case "register-patient": {
        await ctx.api.registerPatient(fields.email, { name: fields.name });
        return nav(hrefFor("registered"));
      }
      case "activate": {
        const account = await ctx.api.activate(fields.token, fields.password);
        // Patients can sign in right away; doctors see the welcome page,
        // which explains the pending admin approval.
        if (account.role === "Patient") {
          return nav(`${hrefFor("login")}?flash=activated`);
        }
        return nav(hrefFor("welcome"));
      }
      case "decide-doctor": {
        await ctx.api.decideDoctor(
          fields.doctor_id,
          fields.decision as "Approve" | "Delete",
        );
        return nav(hrefFor("admin-pending"));
      }
      case "save-service": {
        const offerings = parseOfferings(fields.offerings ?? "");
        await ctx.api.putService(
          session!.accountId,
          fields.enabled === "on" || fields.enabled === "true",
          offerings,
        );
        return nav(`${hrefFor("doctor-service")}?flash=saved`);
      }
      case "set-status": {
        await ctx.api.setBookingStatus(
          fields.booking_id,
          fields.status as BookingStatus,
        );
        return nav(hrefFor("doctor-booking-detail", { id: fields.booking_id }));
      }
      case "prescribe": {
        await ctx.api.attachPrescription(fields.booking_id, fields.prescription);
        return nav(
          `${hrefFor("doctor-booking-detail", { id: fields.booking_id })}?flash=prescribed`,
        );
      }
      case "search-doctors":
        return nav(hrefFor("patient-doctors", {}, fields.q ? { q: fields.q } : {}));
      case "book": {
        try {
          await ctx.api.createBooking(
            fields.doctor_id,
            fields.date,
            fields.slot_start,
          );
        } catch (exc) {
          if (exc instanceof ApiError && exc.type === "SlotTaken") {
            return nav(
              `${hrefFor("patient-book", { doctorId: fields.doctor_id })}?flash=slot-taken`,
            );
          }
          throw exc;
        }
        return nav(`${hrefFor("patient-bookings")}?flash=booked`);
      }
      case "topup": {
        await ctx.api.topup(session!.accountId, Number(fields.amount));
        return nav(`${hrefFor("patient-bookings")}?flash=topped-up`);
      }
      case "add-history": {
        await ctx.api.addHistory(session!.accountId, fields.category, fields.entry);
        return nav(hrefFor("patient-history"));
      }
      case "save-basic-info": {
        await ctx.api.setBasicInfo(session!.accountId, {
          [fields.field]: fields.value,
        });
        return nav(hrefFor("patient-history"));
      }
      default:
        throw new Error(`unknown action ${action}`);
    }
  } catch (exc) {
    if (exc instanceof ApiError) {
      if (exc.status === 401 && action !== "login") {
        ctx.session.clear();
        ctx.api.token = null;
        return nav(`${hrefFor("login")}?flash=session-expired`);
      }
      return {
        kind: "form-error",
        error: { type: exc.type, message: exc.message },
        values: fields,
      };
    }
    if (exc instanceof Error && action === "save-service") {
      return {
        kind: "form-error",
        error: { type: "FormInvalid", message: exc.message },
        values: fields,
      };
    }
    throw exc;
  }

  function nav(hash: string): ActionResult {
    return { kind: "navigate", hash };
  }
}
