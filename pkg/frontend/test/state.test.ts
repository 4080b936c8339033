import { describe, expect, it } from 'vitest';

import {
  STALE_LIMIT_MS,
  applySnapshot,
  hasFrames,
  initialState,
  isStale,
  renderStamp,
  windowFillLabel,
} from '../src/state.js';
import type { ServerState } from '../src/types.js';

function snapshot(overrides: Partial<ServerState> = {}): ServerState {
  return {
    session_id: 'abc',
    params: {
      FP: 35,
      P_i: 0,
      R_o: 0,
      CC: 0,
      C_n: 1,
      R_x: 90,
      mode: 'saai',
      window_size: 30,
    },
    params_version: 3,
    playback: {
      playing: false,
      fps: 10,
      cursor: 4,
      frame_count: 10,
      at_end: false,
      current_index: 3,
    },
    window: { fill: 4, capacity: 30, indices: [0, 1, 2, 3] },
    last_render_ms: 12.5,
    modes: ['thermal_integral', 'ad_on_integral', 'saai'],
    ...overrides,
  };
}

describe('applySnapshot', () => {
  it('copies the server acknowledgment into display state', () => {
    const state = applySnapshot(initialState(), snapshot(), 1000);
    expect(state.sessionId).toBe('abc');
    expect(state.paramsVersion).toBe(3);
    expect(state.params!.FP).toBe(35);
    expect(state.cursor).toBe(4);
    expect(state.currentIndex).toBe(3);
    expect(state.lastRenderMs).toBe(12.5);
    expect(state.lastSnapshotAt).toBe(1000);
  });

  it('converts wire angles to degrees for display', () => {
    const server = snapshot();
    server.params.CC = Math.PI / 6;
    const state = applySnapshot(initialState(), server, 0);
    expect(state.params!.CC).toBeCloseTo(30, 10);
  });
});

describe('staleness', () => {
  it('is fresh before the first snapshot', () => {
    expect(isStale(initialState(), 1e9)).toBe(false);
  });

  it('turns stale strictly beyond the limit', () => {
    const state = applySnapshot(initialState(), snapshot(), 1000);
    expect(isStale(state, 1000 + STALE_LIMIT_MS)).toBe(false);
    expect(isStale(state, 1000 + STALE_LIMIT_MS + 1)).toBe(true);
  });
});

describe('render stamp', () => {
  it('changes when a new frame arrives or parameters change', () => {
    const base = applySnapshot(initialState(), snapshot(), 0);
    const newFrame = applySnapshot(
      base,
      snapshot({ playback: { ...snapshot().playback, current_index: 4 } }),
      0,
    );
    const newParams = applySnapshot(base, snapshot({ params_version: 4 }), 0);
    expect(renderStamp(newFrame)).not.toBe(renderStamp(base));
    expect(renderStamp(newParams)).not.toBe(renderStamp(base));
    expect(renderStamp(applySnapshot(base, snapshot(), 99))).toBe(renderStamp(base));
  });

  it('reports frame availability', () => {
    expect(hasFrames(initialState())).toBe(false);
    expect(hasFrames(applySnapshot(initialState(), snapshot(), 0))).toBe(true);
  });
});

describe('window fill label', () => {
  it('formats fill over capacity', () => {
    expect(windowFillLabel(initialState())).toBe('- / -');
    expect(windowFillLabel(applySnapshot(initialState(), snapshot(), 0))).toBe('4 / 30');
  });
});
