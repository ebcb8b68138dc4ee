/**
 * Attempt history, kept only in the browser's localStorage. Newest first.
 */

export interface AttemptRecord {
  questionId: string;
  responseText: string;
  verdict: "correct" | "incorrect";
  timestamp: number;
  generatedSource: string | null;
}

const STORAGE_KEY = "cgbg-attempts-v1";

type Store = Record<string, AttemptRecord[]>;

function readStore(): Store {
  try {
    const raw = localStorage.getItem(STORAGE_KEY);
    if (!raw) return {};
    const parsed: unknown = JSON.parse(raw);
    if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) return {};
    return parsed as Store;
  } catch {
    return {};
  }
}

function writeStore(store: Store): void {
  localStorage.setItem(STORAGE_KEY, JSON.stringify(store));
}

export function loadAttempts(questionId: string): AttemptRecord[] {
  const attempts = readStore()[questionId];
  return Array.isArray(attempts) ? attempts : [];
}

export function appendAttempt(record: AttemptRecord): AttemptRecord[] {
  const store = readStore();
  const updated = [record, ...(store[record.questionId] ?? [])];
  store[record.questionId] = updated;
  writeStore(store);
  return updated;
}

export function clearAttempts(questionId?: string): void {
  if (questionId === undefined) {
    localStorage.removeItem(STORAGE_KEY);
    return;
  }
  const store = readStore();
  delete store[questionId];
  writeStore(store);
}
