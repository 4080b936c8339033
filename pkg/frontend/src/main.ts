/**
 * Entry point: create a session against the serving origin and mount
 * the tuner. `?api=<base>` points the client at a different service
 * origin during development.
 */

import { ApiClient } from './api.js';
import { App } from './app.js';

const base = new URLSearchParams(window.location.search).get('api') ?? '';
const app = new App(document, new ApiClient(base));

app.start().catch((error) => {
  const banner = document.getElementById('banner-error');
  if (banner !== null) {
    banner.textContent = `failed to start: ${error}`;
    banner.classList.remove('hidden');
  }
});
