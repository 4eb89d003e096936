// The client's only held state: the session token and who it belongs to.
// Everything rendered on a screen comes from API responses; this just lets a
// reload re-authenticate the same fetches.

import type { Role } from "./types.js";

export interface SessionState {
  token: string;
  accountId: string;
  role: Role;
}

const KEY = "medirelay.session";

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class SessionStore {
  private state: SessionState | null = null;

  constructor(private readonly storage?: StorageLike) {
    const raw = storage?.getItem(KEY);
    if (raw) {
      try {
        this.state = JSON.parse(raw) as SessionState;
      } catch {
        storage?.removeItem(KEY);
      }
    }
  }

  get(): SessionState | null {
    return this.state;
  }

  set(state: SessionState): void {
    this.state = state;
    this.storage?.setItem(KEY, JSON.stringify(state));
  }

  clear(): void {
    this.state = null;
    this.storage?.removeItem(KEY);
  }
}
