/** Keyboard-first assignment: j/k or arrows move between cards, digits
 * 1..9 assign the focused card to the gold aspect at that list position,
 * 0 or x rejects (unmapped), v validates, c commits. */

import type { SessionState } from './state';

export interface KeyboardActions {
  assign: (mia: number, gsa: string | null) => void;
  validate: () => void;
  commit: () => void;
  refocus: () => void;
}

export function handleKey(
  event: KeyboardEvent,
  state: SessionState,
  actions: KeyboardActions,
): boolean {
  const target = event.target as HTMLElement | null;
  if (target && (target.tagName === 'INPUT' || target.tagName === 'TEXTAREA')) {
    return false;
  }
  const order = state.aspects.map((a) => a.mia);
  const pos = order.indexOf(state.focusedMia);

  if (event.key === 'j' || event.key === 'ArrowDown' || event.key === 'ArrowRight') {
    state.focusedMia = order[Math.min(pos + 1, order.length - 1)];
    actions.refocus();
    return true;
  }
  if (event.key === 'k' || event.key === 'ArrowUp' || event.key === 'ArrowLeft') {
    state.focusedMia = order[Math.max(pos - 1, 0)];
    actions.refocus();
    return true;
  }
  if (event.key >= '1' && event.key <= '9') {
    const gsa = state.gsaNames[Number(event.key) - 1];
    if (gsa !== undefined) {
      actions.assign(state.focusedMia, gsa);
      return true;
    }
    return false;
  }
  if (event.key === '0' || event.key === 'x') {
    actions.assign(state.focusedMia, null);
    return true;
  }
  if (event.key === 'v') {
    actions.validate();
    return true;
  }
  if (event.key === 'c') {
    actions.commit();
    return true;
  }
  return false;
}
