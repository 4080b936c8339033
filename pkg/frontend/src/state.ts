/**
 * Client-side session state.
 *
 * The UI never holds optimistic values: everything here is a copy of the
 * last server acknowledgment or snapshot, plus the timestamp it arrived.
 */

import type { ServerState, UiParams, WindowState } from './types.js';
import { wireToUi } from './units.js';

/** Snapshot age beyond which the connection counts as stale. */
export const STALE_LIMIT_MS = 2000;

export interface UiState {
  sessionId: string | null;
  /** Last acknowledged parameters, already converted to display units. */
  params: UiParams | null;
  paramsVersion: number;
  playing: boolean;
  fps: number;
  cursor: number;
  frameCount: number;
  atEnd: boolean;
  currentIndex: number | null;
  window: WindowState | null;
  lastRenderMs: number | null;
  /** Clock reading when the last snapshot arrived, null before the first. */
  lastSnapshotAt: number | null;
}

export function initialState(): UiState {
  return {
    sessionId: null,
    params: null,
    paramsVersion: 0,
    playing: false,
    fps: 10,
    cursor: 0,
    frameCount: 0,
    atEnd: false,
    currentIndex: null,
    window: null,
    lastRenderMs: null,
    lastSnapshotAt: null,
  };
}

/** Fold a server snapshot into the client state. */
export function applySnapshot(state: UiState, server: ServerState, now: number): UiState {
  return {
    ...state,
    sessionId: server.session_id,
    params: wireToUi(server.params),
    paramsVersion: server.params_version,
    playing: server.playback.playing,
    fps: server.playback.fps,
    cursor: server.playback.cursor,
    frameCount: server.playback.frame_count,
    atEnd: server.playback.at_end,
    currentIndex: server.playback.current_index,
    window: server.window,
    lastRenderMs: server.last_render_ms,
    lastSnapshotAt: now,
  };
}

export function isStale(state: UiState, now: number, limitMs = STALE_LIMIT_MS): boolean {
  if (state.lastSnapshotAt === null) {
    return false; // still connecting, not yet stale
  }
  return now - state.lastSnapshotAt > limitMs;
}

/** "3 / 30" style window fill label. */
export function windowFillLabel(state: UiState): string {
  if (state.window === null) {
    return '- / -';
  }
  return `${state.window.fill} / ${state.window.capacity}`;
}

/**
 * Identity of the currently displayable render. Panes refetch exactly
 * when this changes, which covers both new frames and parameter updates.
 */
export function renderStamp(state: UiState): string {
  return `${state.currentIndex ?? 'none'}:${state.paramsVersion}`;
}

export function hasFrames(state: UiState): boolean {
  return state.currentIndex !== null;
}
