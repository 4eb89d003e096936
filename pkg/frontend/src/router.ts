// Hash router: every screen in the portal is one route here so a reload (or
// a shared link) lands on the same content. The inventory below is asserted
// by tests; add a screen by adding a route.

import type { Role } from "./types.js";

export interface Route {
  name: string;
  pattern: string; // "#/doctor/bookings/:id"
  title: string;
  role: Role | null; // null: no session required
}

export const ROUTES: Route[] = [
  { name: "login", pattern: "#/login", title: "Sign in", role: null },
  { name: "register-doctor", pattern: "#/register/doctor", title: "Doctor registration", role: null },
  { name: "register-patient", pattern: "#/register/patient", title: "Patient registration", role: null },
  { name: "registered", pattern: "#/registered", title: "Check your email", role: null },
  { name: "activate", pattern: "#/activate/:token", title: "Activate account", role: null },
  { name: "welcome", pattern: "#/welcome", title: "Welcome", role: null },
  { name: "admin-pending", pattern: "#/admin/pending", title: "Doctors awaiting approval", role: "Admin" },
  { name: "doctor-service", pattern: "#/doctor/service", title: "Service settings", role: "Doctor" },
  { name: "doctor-bookings", pattern: "#/doctor/bookings", title: "Booking requests", role: "Doctor" },
  { name: "doctor-booking-detail", pattern: "#/doctor/bookings/:id", title: "Booking request", role: "Doctor" },
  { name: "patient-doctors", pattern: "#/patient/doctors", title: "Find a doctor", role: "Patient" },
  { name: "patient-book", pattern: "#/patient/book/:doctorId", title: "Book a consultation", role: "Patient" },
  { name: "patient-bookings", pattern: "#/patient/bookings", title: "My bookings", role: "Patient" },
  { name: "patient-history", pattern: "#/patient/history", title: "My medical history", role: "Patient" },
];

export interface Parsed {
  route: Route;
  params: Record<string, string>;
  query: Record<string, string>;
}

export function parseHash(hash: string): Parsed | null {
  const [pathPart, queryPart] = (hash || "#/login").split("?", 2);
  const query: Record<string, string> = {};
  if (queryPart) {
    for (const pair of queryPart.split("&")) {
      if (!pair) continue;
      const [k, v] = pair.split("=", 2);
      query[decodeURIComponent(k)] = decodeURIComponent(v ?? "");
    }
  }
  const segments = pathPart.replace(/\/+$/, "").split("/");
  for (const route of ROUTES) {
    const want = route.pattern.split("/");
    if (want.length !== segments.length) continue;
    const params: Record<string, string> = {};
    let ok = true;
    for (let i = 0; i < want.length; i++) {
      if (want[i].startsWith(":")) {
        if (!segments[i]) {
          ok = false;
          break;
        }
        params[want[i].slice(1)] = decodeURIComponent(segments[i]);
      } else if (want[i] !== segments[i]) {
        ok = false;
        break;
      }
    }
    if (ok) return { route, params, query };
  }
  return null;
}

export function hrefFor(
  name: string,
  params: Record<string, string> = {},
  query: Record<string, string> = {},
): string {
  const route = ROUTES.find((r) => r.name === name);
  if (!route) throw new Error(`unknown route ${name}`);
  let href = route.pattern;
  for (const [key, value] of Object.entries(params)) {
    href = href.replace(`:${key}`, encodeURIComponent(value));
  }
  if (href.includes("/:")) throw new Error(`missing params for ${name}`);
  const qs = Object.entries(query)
    .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(v)}`)
    .join("&");
  return qs ? `${href}?${qs}` : href;
}

export function homeFor(role: Role | null): string {
  switch (role) {
    case "Admin":
      return hrefFor("admin-pending");
    case "Doctor":
      return hrefFor("doctor-bookings");
    case "Patient":
      return hrefFor("patient-bookings");
    default:
      return hrefFor("login");
  }
}
