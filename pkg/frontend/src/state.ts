/**
 * Session state and request supersession.
 *
 * All transitions are pure functions over SessionState so they can be
 * tested without a DOM. Concurrency rule: every request carries a
 * monotonically increasing sequence number and only a response newer than
 * the one currently rendered may replace it (last-write-wins); stale
 * responses and errors never clobber the latest valid visualization.
 */

import type { ExplainResponse, FactorId, PatientForm, WhatIfResponse } from './types.js';

export interface AdjustmentEntry {
  factor: FactorId | 'form';
  value: string;
  riskDisplay: string;
}

export interface ApiFailure {
  status: number;
  code: string;
  field?: string;
  message: string;
}

export interface SessionState {
  patient: PatientForm | null;
  /** latest successfully applied explanation; the flower always mirrors it */
  explain: ExplainResponse | null;
  whatif: WhatIfResponse | null;
  selectedScenario: string | null;
  showNumbers: boolean;
  fieldErrors: Record<string, string>;
  lastError: ApiFailure | null;
  history: AdjustmentEntry[];
  /** last issued request sequence number */
  issuedSeq: number;
  /** sequence number of the response currently rendered */
  appliedSeq: number;
}

export const HISTORY_LIMIT = 8;

export function initialState(): SessionState {
  return {
    patient: null,
    explain: null,
    whatif: null,
    selectedScenario: null,
    showNumbers: false,
    fieldErrors: {},
    lastError: null,
    history: [],
    issuedSeq: 0,
    appliedSeq: 0,
  };
}

/** Allocate the next request sequence number. */
export function beginRequest(state: SessionState): { state: SessionState; seq: number } {
  const seq = state.issuedSeq + 1;
  return { state: { ...state, issuedSeq: seq }, seq };
}

/** True when a response with this sequence number may be rendered. */
export function isCurrent(state: SessionState, seq: number): boolean {
  return seq > state.appliedSeq;
}

export function applyExplain(
  state: SessionState,
  seq: number,
  patient: PatientForm,
  response: ExplainResponse,
): SessionState {
  if (!isCurrent(state, seq)) return state; // superseded by a newer response
  return {
    ...state,
    patient,
    explain: response,
    appliedSeq: seq,
    fieldErrors: {},
    lastError: null,
    // a new explanation invalidates scenario results for the old patient
    whatif: null,
    selectedScenario: null,
  };
}

export function applyWhatIf(state: SessionState, seq: number, response: WhatIfResponse): SessionState {
  if (seq < state.appliedSeq) return state;
  return { ...state, whatif: response, lastError: null };
}

/** Server/network failure: surface it, keep the last valid visualization. */
export function applyFailure(state: SessionState, seq: number, failure: ApiFailure): SessionState {
  if (!isCurrent(state, seq)) return state;
  const fieldErrors = failure.field ? { [failure.field]: failure.message } : {};
  return { ...state, lastError: failure, fieldErrors };
}

export function setFieldErrors(state: SessionState, errors: Record<string, string>): SessionState {
  return { ...state, fieldErrors: errors };
}

export function toggleNumbers(state: SessionState): SessionState {
  return { ...state, showNumbers: !state.showNumbers };
}

export function selectScenario(state: SessionState, kind: string | null): SessionState {
  return { ...state, selectedScenario: kind };
}

export function pushHistory(state: SessionState, entry: AdjustmentEntry): SessionState {
  const history = [entry, ...state.history].slice(0, HISTORY_LIMIT);
  return { ...state, history };
}

/**
 * Risk strings shown to the user come verbatim from the service's display
 * fields; the client never re-rounds fractions.
 */
export function riskLabel(state: SessionState): string | null {
  return state.explain ? state.explain.display.risk_surrogate : null;
}

export function score2Label(state: SessionState): string | null {
  return state.explain ? state.explain.display.risk_score2 : null;
}

/** Debounce an action; trailing edge only. */
export function debounce<Args extends unknown[]>(
  fn: (...args: Args) => void,
  waitMs = 150,
): { call: (...args: Args) => void; cancel: () => void } {
  let timer: ReturnType<typeof setTimeout> | null = null;
  return {
    call: (...args: Args) => {
      if (timer !== null) clearTimeout(timer);
      timer = setTimeout(() => {
        timer = null;
        fn(...args);
      }, waitMs);
    },
    cancel: () => {
      if (timer !== null) clearTimeout(timer);
      timer = null;
    },
  };
}
