/**
 * DOM controller for the split-screen tuner.
 *
 * Left pane shows the newest single frame, right pane the live integral;
 * both are <img> elements whose sources point straight at the service
 * view endpoints, so no pixel shown here was computed client-side.
 * Parameter edits go through the debounced mailbox and the panel always
 * re-displays the last acknowledged server state.
 */

import { ApiClient, ApiError } from './api.js';
import { ParamMailbox } from './debounce.js';
import {
  applySnapshot,
  hasFrames,
  initialState,
  isStale,
  renderStamp,
  windowFillLabel,
} from './state.js';
import type { UiState } from './state.js';
import { KEY_LEGEND, keyAction, nextMode } from './keys.js';
import { formatLatency, formatValue, uiToWire } from './units.js';
import type { Mode, ServerState, UiParams } from './types.js';
import { MODES } from './types.js';

interface SliderSpec {
  name: keyof UiParams & ('FP' | 'P_i' | 'R_o' | 'CC' | 'C_n' | 'R_x');
  min: number;
  max: number;
  step: number;
}

// Slider granularity for the contrast and threshold dials: 0.1 each
const SLIDERS: SliderSpec[] = [
  { name: 'FP', min: 5, max: 100, step: 0.5 },
  { name: 'P_i', min: -45, max: 45, step: 0.5 },
  { name: 'R_o', min: -45, max: 45, step: 0.5 },
  { name: 'CC', min: -180, max: 180, step: 0.5 },
  { name: 'C_n', min: 0, max: 5, step: 0.1 },
  { name: 'R_x', min: 0, max: 100, step: 0.1 },
];

export interface AppOptions {
  /** Snapshot poll period in ms. */
  pollMs?: number;
  now?: () => number;
}

export class App {
  private readonly doc: Document;
  private readonly api: ApiClient;
  private readonly now: () => number;
  private readonly pollMs: number;

  private state: UiState = initialState();
  private mailbox: ParamMailbox;
  private activeDrag: string | null = null;
  private lastStamp = '';
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private staleTimer: ReturnType<typeof setInterval> | null = null;

  private sliders = new Map<string, HTMLInputElement>();
  private values = new Map<string, HTMLElement>();
  private rows = new Map<string, HTMLElement>();
  private modeSelect!: HTMLSelectElement;
  private windowInput!: HTMLInputElement;

  constructor(doc: Document, api: ApiClient, options: AppOptions = {}) {
    this.doc = doc;
    this.api = api;
    this.now = options.now ?? (() => Date.now());
    this.pollMs = options.pollMs ?? 400;
    this.mailbox = new ParamMailbox(
      (changes) => this.api.patchParams(this.state.sessionId ?? '', changes),
      (state) => {
        this.clearError();
        this.acceptState(state);
      },
      (error) => this.showError(error),
    );
  }

  async start(): Promise<void> {
    this.buildPanel();
    this.buildLegend();
    this.bindPlayback();
    this.bindKeyboard();
    const created = await this.api.createSession();
    this.acceptState(created.state);
    this.pollTimer = setInterval(() => void this.poll(), this.pollMs);
    this.staleTimer = setInterval(() => this.renderStaleness(), 250);
  }

  stop(): void {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
    if (this.staleTimer !== null) clearInterval(this.staleTimer);
  }

  // ------------------------------------------------------------------
  // state intake

  private acceptState(server: ServerState): void {
    this.state = applySnapshot(this.state, server, this.now());
    this.renderPanel();
    this.refreshViews();
  }

  private async poll(): Promise<void> {
    if (this.state.sessionId === null) {
      return;
    }
    try {
      const server = await this.api.state(this.state.sessionId);
      this.acceptState(server);
    } catch {
      // A missed poll only ages the last snapshot; the staleness
      // ticker raises the banner once 2 s have passed.
    }
  }

  /** Point the panes at the server render identified by the snapshot. */
  private refreshViews(): void {
    const stamp = renderStamp(this.state);
    if (stamp === this.lastStamp) {
      return;
    }
    this.lastStamp = stamp;
    const left = this.el<HTMLImageElement>('pane-left');
    const right = this.el<HTMLImageElement>('pane-right');
    const sid = this.state.sessionId ?? '';
    const show = hasFrames(this.state);
    this.el('left-placeholder').classList.toggle('hidden', show);
    this.el('right-placeholder').classList.toggle('hidden', show);
    if (show) {
      const frame = this.state.currentIndex;
      const version = this.state.paramsVersion;
      left.src = this.api.viewUrl(sid, 'left', frame, version);
      right.src = this.api.viewUrl(sid, 'right', frame, version);
    }
  }

  // ------------------------------------------------------------------
  // parameter panel

  private buildPanel(): void {
    const panel = this.el('panel');
    for (const spec of SLIDERS) {
      const row = this.doc.createElement('div');
      row.className = 'param';
      row.dataset.name = spec.name;

      const label = this.doc.createElement('label');
      label.textContent = spec.name;
      const slider = this.doc.createElement('input');
      slider.type = 'range';
      slider.min = String(spec.min);
      slider.max = String(spec.max);
      slider.step = String(spec.step);
      const value = this.doc.createElement('span');
      value.className = 'value';
      value.textContent = '-';

      slider.addEventListener('pointerdown', () => {
        this.activeDrag = spec.name;
      });
      slider.addEventListener('pointerup', () => {
        this.activeDrag = null;
        this.renderPanel();
      });
      slider.addEventListener('input', () => {
        this.pushParam(spec.name, Number(slider.value));
      });

      row.append(label, slider, value);
      panel.append(row);
      this.sliders.set(spec.name, slider);
      this.values.set(spec.name, value);
      this.rows.set(spec.name, row);
    }

    // mode selector
    const modeRow = this.doc.createElement('div');
    modeRow.className = 'param';
    modeRow.dataset.name = 'mode';
    const modeLabel = this.doc.createElement('label');
    modeLabel.textContent = 'mode';
    this.modeSelect = this.doc.createElement('select');
    for (const mode of MODES) {
      const option = this.doc.createElement('option');
      option.value = mode;
      option.textContent = mode;
      this.modeSelect.append(option);
    }
    this.modeSelect.addEventListener('change', () => {
      this.mailbox.push({ mode: this.modeSelect.value as Mode });
    });
    const modeValue = this.doc.createElement('span');
    modeValue.className = 'value';
    modeRow.append(modeLabel, this.modeSelect, modeValue);
    panel.append(modeRow);
    this.rows.set('mode', modeRow);

    // window size
    const windowRow = this.doc.createElement('div');
    windowRow.className = 'param';
    windowRow.dataset.name = 'window_size';
    const windowLabel = this.doc.createElement('label');
    windowLabel.textContent = 'window';
    this.windowInput = this.doc.createElement('input');
    this.windowInput.type = 'number';
    this.windowInput.min = '1';
    this.windowInput.step = '1';
    this.windowInput.addEventListener('change', () => {
      const size = Math.round(Number(this.windowInput.value));
      if (Number.isFinite(size) && size >= 1) {
        this.mailbox.push({ window_size: size });
      }
    });
    const windowValue = this.doc.createElement('span');
    windowValue.className = 'value';
    windowRow.append(windowLabel, this.windowInput, windowValue);
    panel.append(windowRow);
    this.rows.set('window_size', windowRow);
  }

  private pushParam(name: SliderSpec['name'], value: number): void {
    this.mailbox.push(uiToWire({ [name]: value }));
  }

  /** Re-display the last acknowledged state; never optimistic values. */
  private renderPanel(): void {
    const params = this.state.params;
    if (params !== null) {
      for (const spec of SLIDERS) {
        const acked = params[spec.name];
        this.values.get(spec.name)!.textContent = formatValue(spec.name, acked);
        if (this.activeDrag !== spec.name) {
          this.sliders.get(spec.name)!.value = String(acked);
        }
      }
      this.modeSelect.value = params.mode;
      if (this.doc.activeElement !== this.windowInput) {
        this.windowInput.value = String(params.window_size);
      }
      this.el('right-caption').textContent = params.mode;
    }

    this.el('btn-play').textContent = this.state.playing ? 'pause' : 'play';
    const frame = this.state.currentIndex === null ? '-' : String(this.state.currentIndex);
    this.el('frame-label').textContent =
      `frame ${frame} / ${this.state.frameCount} (cursor ${this.state.cursor})`;
    this.el('fill-label').textContent = windowFillLabel(this.state);
    const bar = this.el<HTMLProgressElement>('fill-bar');
    bar.value = this.state.window === null || this.state.window.capacity === 0
      ? 0
      : this.state.window.fill / this.state.window.capacity;
    this.el('latency-label').textContent = formatLatency(this.state.lastRenderMs);
    const fps = this.el<HTMLInputElement>('fps-input');
    if (this.doc.activeElement !== fps) {
      fps.value = String(this.state.fps);
    }
    this.el('banner-end').classList.toggle(
      'hidden',
      !(this.state.atEnd && !this.state.playing),
    );
  }

  private renderStaleness(): void {
    const stale = isStale(this.state, this.now());
    this.el('banner-stale').classList.toggle('hidden', !stale);
  }

  // ------------------------------------------------------------------
  // playback

  private bindPlayback(): void {
    this.el('btn-play').addEventListener('click', () => void this.togglePlay());
    this.el('btn-step').addEventListener('click', () => void this.stepOnce());
    this.el('btn-reset').addEventListener('click', () => void this.reset());
    this.el<HTMLInputElement>('fps-input').addEventListener('change', () => {
      if (this.state.playing) {
        void this.togglePlay(true);
      }
    });
  }

  private async togglePlay(restart = false): Promise<void> {
    const sid = this.state.sessionId;
    if (sid === null) {
      return;
    }
    try {
      if (this.state.playing && !restart) {
        this.acceptState(await this.api.pause(sid));
      } else {
        const fps = Number(this.el<HTMLInputElement>('fps-input').value);
        this.acceptState(await this.api.play(sid, Number.isFinite(fps) ? fps : undefined));
      }
      this.clearError();
    } catch (error) {
      this.showError(error);
    }
  }

  private async stepOnce(): Promise<void> {
    const sid = this.state.sessionId;
    if (sid === null) {
      return;
    }
    try {
      const result = await this.api.step(sid, 1);
      this.acceptState(result.state);
      this.clearError();
    } catch (error) {
      this.showError(error);
    }
  }

  private async reset(): Promise<void> {
    const sid = this.state.sessionId;
    if (sid === null) {
      return;
    }
    try {
      this.acceptState(await this.api.resetParams(sid));
      this.clearError();
    } catch (error) {
      this.showError(error);
    }
  }

  // ------------------------------------------------------------------
  // keyboard

  private bindKeyboard(): void {
    this.doc.addEventListener('keydown', (event) => {
      const target = event.target as HTMLElement | null;
      if (target && ['INPUT', 'SELECT', 'TEXTAREA'].includes(target.tagName)) {
        return;
      }
      const action = keyAction(event.key);
      if (action === null) {
        return;
      }
      event.preventDefault();
      if (action.kind === 'nudge') {
        this.nudge(action.param, action.delta);
      } else if (action.kind === 'play_pause') {
        void this.togglePlay();
      } else if (action.kind === 'step') {
        void this.stepOnce();
      } else if (action.kind === 'reset') {
        void this.reset();
      } else if (action.kind === 'mode_next') {
        const params = this.state.params;
        if (params !== null) {
          this.mailbox.push({ mode: nextMode(params.mode) });
        }
      }
    });
  }

  /** Apply a keyboard delta on top of the last acknowledged value. */
  private nudge(name: SliderSpec['name'], delta: number): void {
    const params = this.state.params;
    if (params === null) {
      return;
    }
    const spec = SLIDERS.find((s) => s.name === name)!;
    const next = Math.min(spec.max, Math.max(spec.min, params[name] + delta));
    this.pushParam(name, next);
  }

  // ------------------------------------------------------------------
  // errors

  private showError(error: unknown): void {
    const banner = this.el('banner-error');
    if (error instanceof ApiError) {
      banner.textContent = `${error.code}: ${error.message}`;
      if (error.field !== null) {
        this.rows.get(error.field)?.classList.add('error');
      }
      if (error.code === 'end_of_stream') {
        this.el('banner-end').classList.remove('hidden');
      }
    } else {
      banner.textContent = String(error);
    }
    banner.classList.remove('hidden');
  }

  private clearError(): void {
    this.el('banner-error').classList.add('hidden');
    for (const row of this.rows.values()) {
      row.classList.remove('error');
    }
  }

  // ------------------------------------------------------------------

  private buildLegend(): void {
    const table = this.el('keys-table');
    for (const [key, meaning] of KEY_LEGEND) {
      const row = this.doc.createElement('tr');
      const keyCell = this.doc.createElement('td');
      keyCell.textContent = key;
      const meaningCell = this.doc.createElement('td');
      meaningCell.textContent = meaning;
      row.append(keyCell, meaningCell);
      table.append(row);
    }
  }

  private el<T extends HTMLElement = HTMLElement>(id: string): T {
    const element = this.doc.getElementById(id);
    if (element === null) {
      throw new Error(`missing element #${id}`);
    }
    return element as T;
  }
}
