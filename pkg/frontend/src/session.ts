/**
 * In-memory UI session. Deliberately never written to localStorage,
 * sessionStorage or cookies: a reload means logging in again, and neither
 * tokens nor anything derived from an Aadhaar number survives the tab.
 */

import type { RoleName } from "./api";

export interface UiSession {
  token: string;
  role: RoleName;
  expiresAt: number; // unix seconds
  accountId: string;
  hospitalName: string | null;
}

let current: UiSession | null = null;

export function setSession(session: UiSession): void {
  current = session;
}

export function clearSession(): void {
  current = null;
}

/** Current session, or null when absent or expired (inclusive, like the API). */
export function activeSession(nowSeconds?: number): UiSession | null {
  if (current === null) return null;
  const now = nowSeconds ?? Math.floor(Date.now() / 1000);
  if (now >= current.expiresAt) {
    current = null;
    return null;
  }
  return current;
}
