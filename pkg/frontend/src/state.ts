/** Session state: aspect cards plus the last server-acknowledged draft.
 * Optimistic edits are reconciled against the PUT response, so the
 * assignment shown always mirrors the server's acknowledgment. */

import type { AspectsPayload, CardStatus, DraftPayload, MappingEntry } from './types';

export interface SessionState {
  gsaNames: string[];
  general: string | null;
  aspects: AspectsPayload['aspects'];
  /** mia -> gsa name or null; missing key = undecided */
  assignments: Map<number, string | null>;
  dirty: boolean;
  focusedMia: number;
}

export function initialState(payload: AspectsPayload, draft: DraftPayload): SessionState {
  const assignments = new Map<number, string | null>();
  for (const entry of draft.entries) {
    if (entry.gsa !== null) assignments.set(entry.mia, entry.gsa);
  }
  // an aspect the server already knows as explicitly unmapped stays
  // undecided in a fresh session until the user confirms the rejection,
  // unless an audit trail marked it (server draft has no such distinction,
  // so any prior explicit edit shows up only through its gsa value)
  return {
    gsaNames: payload.gsa_names,
    general: payload.general,
    aspects: payload.aspects,
    assignments,
    dirty: false,
    focusedMia: payload.aspects.length ? payload.aspects[0].mia : 0,
  };
}

export function cardStatus(state: SessionState, mia: number): CardStatus {
  if (!state.assignments.has(mia)) return 'undecided';
  return state.assignments.get(mia) === null ? 'unmapped' : 'mapped';
}

export interface Progress {
  mapped: number;
  unmapped: number;
  undecided: number;
}

export function progress(state: SessionState): Progress {
  const out: Progress = { mapped: 0, unmapped: 0, undecided: 0 };
  for (const aspect of state.aspects) {
    out[cardStatus(state, aspect.mia)] += 1;
  }
  return out;
}

/** Apply a server draft acknowledgment; decided keys come from prior state
 * (the server cannot distinguish "never touched" from "explicitly rejected"). */
export function reconcile(state: SessionState, draft: DraftPayload): void {
  for (const entry of draft.entries) {
    if (entry.gsa !== null) {
      state.assignments.set(entry.mia, entry.gsa);
    } else if (state.assignments.has(entry.mia)) {
      state.assignments.set(entry.mia, null);
    }
  }
}

export function stageAssignment(
  state: SessionState,
  mia: number,
  gsa: string | null,
): MappingEntry[] {
  state.assignments.set(mia, gsa);
  state.dirty = true;
  return [{ mia, gsa }];
}

export function decidedCount(state: SessionState): number {
  return state.assignments.size;
}
