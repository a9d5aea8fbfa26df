/** Board rendering: one card per model aspect with keywords, example
 * segments, rule hint chips, and the assignment dropdown. */

import { RULE_HINTS } from './hints';
import { cardStatus, progress, type SessionState } from './state';
import type { AspectInfo } from './types';

export const UNMAPPED_VALUE = '__unmapped__';
export const UNDECIDED_VALUE = '__undecided__';

export type AssignHandler = (mia: number, gsa: string | null) => void;

export function renderProgress(state: SessionState, el: HTMLElement): void {
  const p = progress(state);
  el.innerHTML = '';
  for (const [cls, count, word] of [
    ['mapped', p.mapped, 'mapped'],
    ['unmapped', p.unmapped, 'unmapped'],
    ['undecided', p.undecided, 'undecided'],
  ] as const) {
    const span = document.createElement('span');
    span.className = `progress-chunk ${cls}`;
    span.textContent = `${count} ${word}`;
    el.appendChild(span);
  }
}

export function renderBoard(
  state: SessionState,
  container: HTMLElement,
  onAssign: AssignHandler,
): void {
  container.innerHTML = '';
  for (const aspect of state.aspects) {
    container.appendChild(buildCard(state, aspect, onAssign));
  }
  highlightFocus(state, container);
}

function buildCard(
  state: SessionState,
  aspect: AspectInfo,
  onAssign: AssignHandler,
): HTMLElement {
  const status = cardStatus(state, aspect.mia);
  const card = document.createElement('article');
  card.className = `card ${status}`;
  card.dataset.mia = String(aspect.mia);

  const head = document.createElement('header');
  const title = document.createElement('h3');
  title.textContent = `aspect ${aspect.mia}`;
  const badge = document.createElement('span');
  badge.className = `status-badge ${status}`;
  badge.textContent = status;
  head.append(title, badge);
  card.appendChild(head);

  const kw = document.createElement('p');
  kw.className = 'keywords';
  kw.textContent = aspect.keywords.map((k) => k.token).join(' ');
  card.appendChild(kw);

  const chips = document.createElement('div');
  chips.className = 'chips';
  for (const hint of RULE_HINTS) {
    const chip = document.createElement('button');
    chip.type = 'button';
    chip.className = `chip chip-${hint.id}`;
    chip.textContent = hint.label;
    chip.title = hint.title;
    chip.addEventListener('click', () => {
      if (hint.action === 'reject') {
        onAssign(aspect.mia, null);
      } else if (hint.action === 'assign-general' && state.general) {
        onAssign(aspect.mia, state.general);
      } else {
        (card.querySelector('select') as HTMLSelectElement | null)?.focus();
      }
    });
    chips.appendChild(chip);
  }
  card.appendChild(chips);

  card.appendChild(buildDropdown(state, aspect, onAssign));

  const examples = document.createElement('ul');
  examples.className = 'examples';
  for (const ex of aspect.examples) {
    const li = document.createElement('li');
    li.textContent = ex.text;
    li.title = `${ex.segment_id} (weight ${ex.beta.toFixed(3)})`;
    examples.appendChild(li);
  }
  card.appendChild(examples);
  return card;
}

function buildDropdown(
  state: SessionState,
  aspect: AspectInfo,
  onAssign: AssignHandler,
): HTMLSelectElement {
  const select = document.createElement('select');
  select.className = 'assign';
  select.setAttribute('aria-label', `assignment for aspect ${aspect.mia}`);

  const undecided = document.createElement('option');
  undecided.value = UNDECIDED_VALUE;
  undecided.textContent = '— undecided —';
  select.appendChild(undecided);

  state.gsaNames.forEach((name, i) => {
    const opt = document.createElement('option');
    opt.value = name;
    opt.textContent = `${i + 1}. ${name}`;
    select.appendChild(opt);
  });

  const reject = document.createElement('option');
  reject.value = UNMAPPED_VALUE;
  reject.textContent = '0. unmapped (reject)';
  select.appendChild(reject);

  const status = cardStatus(state, aspect.mia);
  if (status === 'mapped') {
    select.value = state.assignments.get(aspect.mia) as string;
  } else if (status === 'unmapped') {
    select.value = UNMAPPED_VALUE;
  } else {
    select.value = UNDECIDED_VALUE;
  }

  select.addEventListener('change', () => {
    if (select.value === UNDECIDED_VALUE) return;
    onAssign(aspect.mia, select.value === UNMAPPED_VALUE ? null : select.value);
  });
  return select;
}

export function highlightFocus(state: SessionState, container: HTMLElement): void {
  for (const card of container.querySelectorAll<HTMLElement>('.card')) {
    card.classList.toggle('focused', Number(card.dataset.mia) === state.focusedMia);
  }
}
