/** View state and its pure transitions.
 *
 * The state mirrors the last successful API responses; the server is the
 * single source of truth and the poll loop overwrites freely. The pending
 * flag serializes mutations: beginMutation refuses a second in-flight
 * request, so at most one POST is ever outstanding.
 */

import type { RankingsView } from "./api.js";

export interface SignalEventView {
  sensor: string;
  signal: boolean;
  recommendedAction: string;
  at: string;
}

export interface ViewState {
  rankings: RankingsView | null;
  signals: SignalEventView[];
  ratio: number;
  pending: boolean;
  error: string | null;
}

export function initialState(): ViewState {
  return { rankings: null, signals: [], ratio: 8, pending: false, error: null };
}

export function applyRankings(state: ViewState, view: RankingsView): ViewState {
  return { ...state, rankings: view, error: null };
}

export function applyError(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}

/** Null when a mutation is already in flight; callers must drop the action. */
export function beginMutation(state: ViewState): ViewState | null {
  if (state.pending) return null;
  return { ...state, pending: true };
}

export function finishMutation(state: ViewState): ViewState {
  return { ...state, pending: false };
}

export function recordSignal(state: ViewState, event: SignalEventView): ViewState {
  return { ...state, signals: [...state.signals, event] };
}

/** Slider values must be positive reals; anything else is a client-side error. */
export function validRatio(raw: number): boolean {
  return Number.isFinite(raw) && raw > 0;
}

export function setRatio(state: ViewState, raw: number): ViewState {
  if (!validRatio(raw)) {
    return applyError(state, `ratio must be a positive number, got ${raw}`);
  }
  return { ...state, ratio: raw, error: null };
}

/** Invariant: a deployed sensor never appears among the candidates. */
export function candidateLabels(state: ViewState): string[] {
  if (!state.rankings) return [];
  const deployed = new Set(state.rankings.deployed);
  return state.rankings.rankings
    .map((row) => row.sensor)
    .filter((label) => !deployed.has(label));
}
