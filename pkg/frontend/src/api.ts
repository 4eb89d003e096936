// Thin typed client over the service's HTTP API. Every method is one
// endpoint; nothing is cached here, so a reload always refetches.

import type {
  Account,
  AppNotification,
  Booking,
  BookingStatus,
  Credit,
  DoctorListing,
  HistoryEntry,
  LoginResult,
  Offering,
  Registered,
  ReviewComposite,
  ServiceSettings,
  Slot,
} from "./types.js";

export class ApiError extends Error {
  readonly type: string;
  readonly status: number;

  constructor(type: string, message: string, status: number) {
    super(message);
    this.name = "ApiError";
    this.type = type;
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Api {
  token: string | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    const doc = text ? JSON.parse(text) : {};
    if (!resp.ok) {
      const err = (doc as { error?: { type?: string; message?: string } }).error;
      throw new ApiError(
        err?.type ?? "HttpError",
        err?.message ?? `HTTP ${resp.status}`,
        resp.status,
      );
    }
    return doc as T;
  }

  // -- accounts ---------------------------------------------------------------

  registerDoctor(email: string, profile: Record<string, string>) {
    return this.request<Registered>("POST", "/register/doctor", { email, profile });
  }

  registerPatient(email: string, profile: Record<string, string>) {
    return this.request<Registered>("POST", "/register/patient", { email, profile });
  }

  activate(token: string, password: string) {
    return this.request<Account>("POST", "/activate", { token, password });
  }

  async login(email: string, password: string): Promise<LoginResult> {
    const result = await this.request<LoginResult>("POST", "/login", {
      email,
      password,
    });
    this.token = result.token;
    return result;
  }

  async logout(): Promise<void> {
    await this.request<unknown>("POST", "/logout");
    this.token = null;
  }

  pendingDoctors() {
    return this.request<{ pending: Account[] }>("GET", "/admin/doctors/pending");
  }

  decideDoctor(doctorId: string, decision: "Approve" | "Delete") {
    return this.request<Account>(
      "POST",
      `/admin/doctors/${encodeURIComponent(doctorId)}/decision`,
      { decision },
    );
  }

  // -- doctors / services / slots ----------------------------------------------

  searchDoctors(query: string) {
    const q = query ? `?query=${encodeURIComponent(query)}` : "";
    return this.request<{ doctors: DoctorListing[] }>("GET", `/doctors${q}`);
  }

  getService(doctorId: string) {
    return this.request<ServiceSettings>(
      "GET",
      `/doctors/${encodeURIComponent(doctorId)}/service`,
    );
  }

  putService(doctorId: string, enabled: boolean, offerings: Offering[]) {
    return this.request<ServiceSettings>(
      "PUT",
      `/doctors/${encodeURIComponent(doctorId)}/service`,
      { enabled, offerings },
    );
  }

  slots(doctorId: string, from: string, to: string) {
    const qs = `?from=${encodeURIComponent(from)}&to=${encodeURIComponent(to)}`;
    return this.request<{ slots: Slot[] }>(
      "GET",
      `/doctors/${encodeURIComponent(doctorId)}/slots${qs}`,
    );
  }

  // -- bookings ----------------------------------------------------------------

  createBooking(doctorId: string, date: string, slotStart: string) {
    return this.request<Booking>("POST", "/bookings", {
      doctor_id: doctorId,
      date,
      slot_start: slotStart,
    });
  }

  listBookings() {
    return this.request<{ bookings: Booking[] }>("GET", "/bookings");
  }

  setBookingStatus(bookingId: string, status: BookingStatus) {
    return this.request<Booking>(
      "POST",
      `/bookings/${encodeURIComponent(bookingId)}/status`,
      { status },
    );
  }

  attachPrescription(bookingId: string, prescription: string) {
    return this.request<Booking>(
      "POST",
      `/bookings/${encodeURIComponent(bookingId)}/prescription`,
      { prescription },
    );
  }

  reviewBooking(bookingId: string) {
    return this.request<ReviewComposite>(
      "GET",
      `/bookings/${encodeURIComponent(bookingId)}/review`,
    );
  }

  // -- history / credit ----------------------------------------------------------

  getHistory(patientId: string, category: string) {
    return this.request<{ entries: HistoryEntry[] }>(
      "GET",
      `/patients/${encodeURIComponent(patientId)}/history/${encodeURIComponent(category)}`,
    );
  }

  addHistory(patientId: string, category: string, entry: string) {
    return this.request<{ patient_id: string; category: string }>(
      "POST",
      `/patients/${encodeURIComponent(patientId)}/history/${encodeURIComponent(category)}`,
      { entry },
    );
  }

  getBasicInfo(patientId: string) {
    return this.request<{ basic_info: Record<string, string> }>(
      "GET",
      `/patients/${encodeURIComponent(patientId)}/history/basic_info`,
    );
  }

  setBasicInfo(patientId: string, fields: Record<string, string>) {
    return this.request<{ patient_id: string }>(
      "POST",
      `/patients/${encodeURIComponent(patientId)}/history/basic_info`,
      { fields },
    );
  }

  topup(patientId: string, amount: number) {
    return this.request<{ patient_id: string; balance: number }>(
      "POST",
      `/patients/${encodeURIComponent(patientId)}/credit`,
      { amount },
    );
  }

  credit(patientId: string) {
    return this.request<Credit>(
      "GET",
      `/patients/${encodeURIComponent(patientId)}/credit`,
    );
  }

  notifications() {
    return this.request<{ notifications: AppNotification[] }>(
      "GET",
      "/notifications",
    );
  }
}
