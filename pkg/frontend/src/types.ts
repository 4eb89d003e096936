// Wire types, mirroring the API's canonical JSON bodies field for field.

export type Role = "Admin" | "Doctor" | "Patient";

export type BookingStatus =
  | "Requested"
  | "Accepted"
  | "Rejected"
  | "Completed"
  | "Cancelled";

export interface Profile {
  [key: string]: string;
}

export interface Account {
  account_id: string;
  role: Role;
  email: string;
  profile: Profile;
  state: string;
  created_at: number;
}

export interface Registered extends Account {
  activation_token: string;
}

export interface LoginResult {
  token: string;
  account_id: string;
  role: Role;
  expires_at: number;
}

export interface Offering {
  weekday: number;
  slot_start: string;
  slot_length: number;
  cost: number;
}

export interface ServiceSettings {
  doctor_id: string;
  enabled: boolean;
  offerings: Offering[];
}

export interface Slot {
  date: string;
  slot_start: string;
  slot_length: number;
  cost: number;
}

export interface DoctorListing {
  account_id: string;
  profile: Profile;
}

export interface Booking {
  booking_id: string;
  patient_id: string;
  doctor_id: string;
  date: string;
  slot_start: string;
  slot_length: number;
  cost: number;
  status: BookingStatus;
  created_at: number;
  prescription: string | null;
  required_radiographs: string[];
  required_tests: string[];
}

export interface HistoryEntry {
  entry: string;
  added_at: number;
}

export interface Posting {
  at: number;
  amount: number;
  reason: string;
  booking_id: string | null;
}

export interface Credit {
  patient_id: string;
  balance: number;
  postings: Posting[];
}

export interface AppNotification {
  kind: string;
  payload: Record<string, unknown>;
  at: number;
}

export interface ReviewComposite {
  patient: {
    account_id: string;
    email: string;
    profile: Profile;
    basic_info: Record<string, string>;
  };
  slot: { date: string; slot_start: string; slot_length: number };
  history: Record<string, [string, number][]>;
}

export const HISTORY_CATEGORIES = [
  "Diseases",
  "Symptoms",
  "Pharmaceuticals",
  "Surgeries",
  "Sensitivities",
  "Radiograph",
  "Tests",
] as const;

export type HistoryCategory = (typeof HISTORY_CATEGORIES)[number];

// Legal transitions, mirroring the server's booking state graph. The UI uses
// this to render only actions the API would accept (illegal moves appear as
// absent buttons, not as errors after the fact).
export const BOOKING_ACTIONS: Record<BookingStatus, BookingStatus[]> = {
  Requested: ["Accepted", "Rejected"],
  Accepted: ["Completed", "Cancelled"],
  Rejected: [],
  Completed: [],
  Cancelled: [],
};

export const PRESCRIBABLE: BookingStatus[] = ["Accepted", "Completed"];
