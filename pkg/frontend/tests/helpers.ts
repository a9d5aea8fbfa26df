import { Workbench } from '../src/app';

export const SHELL = `
  <header>
    <div id="progress"></div>
    <span id="dirty-flag" hidden></span>
    <button id="validate-btn" disabled></button>
    <button id="commit-btn"></button>
  </header>
  <div id="banner" hidden></div>
  <main>
    <section id="board"></section>
    <aside id="metrics"></aside>
  </main>
  <footer><span id="commit-info"></span></footer>
`;

let current: Workbench | null = null;

export async function bootWorkbench(): Promise<Workbench> {
  current?.dispose();
  document.body.innerHTML = SHELL;
  const app = new Workbench(document);
  current = app;
  await app.start();
  return app;
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

/** Drive the assignment dropdown of one card like a user would. */
export async function selectAssignment(mia: number, value: string): Promise<void> {
  const card = document.querySelector(`.card[data-mia="${mia}"]`);
  const select = card?.querySelector('select');
  if (!select) throw new Error(`no dropdown for aspect ${mia}`);
  (select as HTMLSelectElement).value = value;
  select.dispatchEvent(new Event('change'));
  await flush();
}
