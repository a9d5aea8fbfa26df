/** Metrics drawer: renders the server's validation report verbatim.
 * No metric is computed client-side; the only derivation is locating the
 * largest off-diagonal confusion cell to point the user at the gold-aspect
 * pair most worth revisiting. */

import type { ValidationReport } from './types';

export function worstConfusedPair(report: ValidationReport): [string, string] | null {
  let bestGold = -1;
  let bestPred = -1;
  let bestCount = 0;
  report.confusion.forEach((row, g) => {
    row.forEach((count, p) => {
      if (g !== p && count > bestCount) {
        bestCount = count;
        bestGold = g;
        bestPred = p;
      }
    });
  });
  if (bestGold < 0) return null;
  return [report.labels[bestGold], report.labels[bestPred]];
}

export function renderMetrics(report: ValidationReport, el: HTMLElement): void {
  el.innerHTML = '';

  const headline = document.createElement('div');
  headline.className = 'headline';
  const micro = document.createElement('div');
  micro.className = 'metric micro';
  // exact server value on purpose: what you see is what the server said
  micro.innerHTML = `<label>micro-F1</label><output id="micro-f1">${String(
    report.micro_f1,
  )}</output>`;
  const wmf = document.createElement('div');
  wmf.className = 'metric';
  wmf.innerHTML = `<label>weighted macro F</label><output id="weighted-f">${String(
    report.weighted_macro.f1,
  )}</output>`;
  headline.append(micro, wmf);
  el.appendChild(headline);

  const bars = document.createElement('div');
  bars.className = 'aspect-bars';
  for (const [name, scores] of Object.entries(report.per_aspect)) {
    const row = document.createElement('div');
    row.className = 'bar-row';
    const label = document.createElement('span');
    label.className = 'bar-label';
    label.textContent = name;
    const track = document.createElement('span');
    track.className = 'bar-track';
    const fill = document.createElement('span');
    fill.className = 'bar-fill';
    fill.style.width = `${Math.round(scores.f1 * 100)}%`;
    track.appendChild(fill);
    const value = document.createElement('span');
    value.className = 'bar-value';
    value.textContent = String(scores.f1);
    row.append(label, track, value);
    bars.appendChild(row);
  }
  el.appendChild(bars);

  el.appendChild(buildConfusionTable(report));

  const pair = worstConfusedPair(report);
  const flag = document.createElement('p');
  flag.className = 'confusion-flag';
  flag.id = 'confusion-flag';
  flag.textContent = pair
    ? `most confused: gold "${pair[0]}" predicted as "${pair[1]}" — revisit aspects mapped to these`
    : 'no off-diagonal confusion';
  el.appendChild(flag);
}

function buildConfusionTable(report: ValidationReport): HTMLTableElement {
  const table = document.createElement('table');
  table.className = 'confusion';
  const head = table.createTHead().insertRow();
  head.insertCell().textContent = 'gold \\ pred';
  for (const label of report.labels) {
    const cell = head.insertCell();
    cell.textContent = label;
  }
  const body = table.createTBody();
  report.confusion.forEach((row, g) => {
    const tr = body.insertRow();
    tr.insertCell().textContent = report.labels[g];
    row.forEach((count, p) => {
      const cell = tr.insertCell();
      cell.textContent = String(count);
      if (g === p) cell.className = 'diagonal';
      else if (count > 0) cell.className = 'offdiag';
    });
  });
  return table;
}
