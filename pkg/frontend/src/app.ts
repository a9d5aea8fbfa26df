/** Single-page workbench: board of aspect cards + metrics drawer.
 * The app issues exactly one server mutation per user action and renders
 * server responses verbatim. */

import {
  ApiError,
  commitDraft,
  fetchAspects,
  fetchDraft,
  putEntries,
  validateDraft,
} from './api';
import { highlightFocus, renderBoard, renderProgress } from './board';
import { handleKey } from './keyboard';
import { renderMetrics } from './metrics';
import {
  decidedCount,
  initialState,
  reconcile,
  stageAssignment,
  type SessionState,
} from './state';

interface Elements {
  board: HTMLElement;
  progress: HTMLElement;
  metrics: HTMLElement;
  banner: HTMLElement;
  validateBtn: HTMLButtonElement;
  commitBtn: HTMLButtonElement;
  commitInfo: HTMLElement;
  dirtyFlag: HTMLElement;
}

function grabElements(root: Document): Elements {
  const get = (id: string) => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el;
  };
  return {
    board: get('board'),
    progress: get('progress'),
    metrics: get('metrics'),
    banner: get('banner'),
    validateBtn: get('validate-btn') as HTMLButtonElement,
    commitBtn: get('commit-btn') as HTMLButtonElement,
    commitInfo: get('commit-info'),
    dirtyFlag: get('dirty-flag'),
  };
}

export class Workbench {
  state!: SessionState;
  private els: Elements;
  private aborter = new AbortController();

  constructor(private root: Document = document) {
    this.els = grabElements(root);
  }

  /** Remove all document/window listeners (tests swap instances). */
  dispose(): void {
    this.aborter.abort();
  }

  async start(): Promise<void> {
    this.els.banner.hidden = true;
    try {
      const [aspects, draft] = await Promise.all([fetchAspects(), fetchDraft()]);
      this.state = initialState(aspects, draft);
    } catch (err) {
      this.showRetryBanner(err);
      return;
    }
    this.redraw();
    const signal = this.aborter.signal;
    this.root.addEventListener(
      'keydown',
      (e) => {
        if (handleKey(e as KeyboardEvent, this.state, this.keyboardActions())) {
          e.preventDefault();
        }
      },
      { signal },
    );
    this.els.validateBtn.addEventListener('click', () => void this.validate(), { signal });
    this.els.commitBtn.addEventListener('click', () => void this.commit(), { signal });
    this.root.defaultView?.addEventListener(
      'beforeunload',
      (e) => {
        if (this.state.dirty) {
          e.preventDefault();
          e.returnValue = true;
        }
      },
      { signal },
    );
  }

  private keyboardActions() {
    return {
      assign: (mia: number, gsa: string | null) => void this.assign(mia, gsa),
      validate: () => void this.validate(),
      commit: () => void this.commit(),
      refocus: () => highlightFocus(this.state, this.els.board),
    };
  }

  private showRetryBanner(err: unknown): void {
    this.els.banner.hidden = false;
    this.els.banner.innerHTML = '';
    const msg = document.createElement('span');
    msg.textContent = `cannot reach the mapping server (${String(err)})`;
    const retry = document.createElement('button');
    retry.textContent = 'retry';
    retry.addEventListener('click', () => void this.start());
    this.els.banner.append(msg, retry);
  }

  redraw(): void {
    renderBoard(this.state, this.els.board, (mia, gsa) => void this.assign(mia, gsa));
    renderProgress(this.state, this.els.progress);
    this.els.validateBtn.disabled = decidedCount(this.state) === 0;
    this.els.dirtyFlag.hidden = !this.state.dirty;
  }

  async assign(mia: number, gsa: string | null): Promise<void> {
    const entries = stageAssignment(this.state, mia, gsa);
    this.state.focusedMia = mia;
    this.redraw(); // optimistic
    try {
      const draft = await putEntries(entries);
      reconcile(this.state, draft);
    } catch (err) {
      this.flashError(err);
      await this.resync();
    }
    this.redraw();
  }

  private async resync(): Promise<void> {
    try {
      const draft = await fetchDraft();
      reconcile(this.state, draft);
    } catch {
      /* keep optimistic state; next action retries */
    }
  }

  async validate(): Promise<void> {
    if (this.els.validateBtn.disabled) return;
    try {
      const report = await validateDraft();
      renderMetrics(report, this.els.metrics);
    } catch (err) {
      this.flashError(err);
    }
  }

  async commit(): Promise<void> {
    try {
      const res = await commitDraft();
      this.state.dirty = false;
      this.els.commitInfo.textContent = `committed ${res.path} (${res.hash})`;
      this.els.commitInfo.dataset.hash = res.hash;
      this.redraw();
    } catch (err) {
      this.flashError(err);
    }
  }

  private flashError(err: unknown): void {
    const text =
      err instanceof ApiError ? `server refused: ${err.detail}` : `request failed: ${String(err)}`;
    this.els.commitInfo.textContent = text;
  }
}

export function boot(root: Document = document): Workbench {
  const app = new Workbench(root);
  void app.start();
  return app;
}
