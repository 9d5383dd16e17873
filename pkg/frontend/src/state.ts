// Session state and its pure transition function. Every mutation flows
// through `transition` with an event that carries the raw server payload,
// so the full state is reproducible by folding the recorded event log.

import type { RecItem } from "./api.js";

export interface TranscriptTurn {
  role: "seeker" | "agent";
  text: string;
}

export interface UiState {
  sessionId: string | null;
  transcript: TranscriptTurn[];
  items: RecItem[];
  liked: string[];
  k: number;
  userSelect: boolean;
  banner: string | null;
  pending: boolean;
}

export type UiEvent =
  | { kind: "session_started"; sessionId: string }
  | { kind: "turn_appended"; role: "seeker" | "agent"; text: string }
  | { kind: "recommend_requested" }
  | { kind: "recommendations_received"; items: RecItem[] }
  | { kind: "liked_marked"; liked: string[] }
  | { kind: "settings_changed"; k?: number; userSelect?: boolean }
  | { kind: "banner_shown"; message: string }
  | { kind: "banner_dismissed" };

export function initialState(): UiState {
  return {
    sessionId: null,
    transcript: [],
    items: [],
    liked: [],
    k: 10,
    userSelect: false,
    banner: null,
    pending: false,
  };
}

export function transition(state: UiState, event: UiEvent): UiState {
  switch (event.kind) {
    case "session_started":
      return { ...initialState(), sessionId: event.sessionId, k: state.k, userSelect: state.userSelect };
    case "turn_appended":
      return {
        ...state,
        transcript: [...state.transcript, { role: event.role, text: event.text }],
      };
    case "recommend_requested":
      return { ...state, pending: true };
    case "recommendations_received":
      // rendered verbatim: the client never reorders or rescores
      return { ...state, items: event.items, pending: false };
    case "liked_marked":
      return { ...state, liked: event.liked };
    case "settings_changed":
      return {
        ...state,
        k: event.k ?? state.k,
        userSelect: event.userSelect ?? state.userSelect,
      };
    case "banner_shown":
      return { ...state, banner: event.message, pending: false };
    case "banner_dismissed":
      return { ...state, banner: null };
  }
}

export function replay(events: readonly UiEvent[]): UiState {
  return events.reduce(transition, initialState());
}
