/**
 * Wire types mirroring the tuning service JSON schema.
 *
 * Angles travel as radians on the wire; the UI layer converts to degrees
 * (see units.ts). Field names match the service parameter schema exactly.
 */

export type Mode = 'thermal_integral' | 'ad_on_integral' | 'saai';

export const MODES: Mode[] = ['thermal_integral', 'ad_on_integral', 'saai'];

export interface WireParams {
  FP: number; // focal-plane distance below the flight path, meters
  P_i: number; // plane pitch, radians
  R_o: number; // plane roll, radians
  CC: number; // compass correction, radians, counter-clockwise positive
  C_n: number; // contrast gain
  R_x: number; // RX threshold percentile, 0..100
  mode: Mode;
  window_size: number;
}

export interface PlaybackState {
  playing: boolean;
  fps: number;
  cursor: number;
  frame_count: number;
  at_end: boolean;
  current_index: number | null;
}

export interface WindowState {
  fill: number;
  capacity: number;
  indices: number[];
}

export interface ServerState {
  session_id: string;
  params: WireParams;
  params_version: number;
  playback: PlaybackState;
  window: WindowState;
  last_render_ms: number | null;
  modes: Mode[];
}

export interface HealthInfo {
  status: string;
  frames: number;
  modes: Mode[];
}

export interface SessionCreated {
  session_id: string;
  state: ServerState;
}

export interface StepResult {
  stepped: number;
  state: ServerState;
}

export interface RightMeta {
  frame_index: number;
  params_version: number;
  shape: number[];
  nonzero_count: number;
  min: number;
  max: number;
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    field?: string;
  };
}

/** Parameter values as the operator sees them: angles in degrees. */
export interface UiParams {
  FP: number;
  P_i: number;
  R_o: number;
  CC: number;
  C_n: number;
  R_x: number;
  mode: Mode;
  window_size: number;
}
