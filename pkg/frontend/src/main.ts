import { boot, type Workbench } from './app';

declare global {
  interface Window {
    __workbench?: Workbench;
  }
}

window.addEventListener('DOMContentLoaded', () => {
  window.__workbench = boot();
});
