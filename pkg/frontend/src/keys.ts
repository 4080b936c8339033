/**
 * Keyboard bindings with controller-stick directional semantics.
 *
 * Arrow keys are the focal-plane stick: up/down move the plane toward or
 * away from the flight path (FP decreases upward), left/right turn the
 * compass correction counter-clockwise/clockwise, so the left arrow
 * increases CC under the counter-clockwise-positive convention. WASD is
 * the tilt stick: w/s pitch the plane forward/backward, a/d roll it
 * left/right. Brackets and minus/equals nudge contrast and threshold.
 */

import type { Mode, UiParams } from './types.js';
import { MODES } from './types.js';

export interface ParamNudge {
  kind: 'nudge';
  param: keyof UiParams & ('FP' | 'P_i' | 'R_o' | 'CC' | 'C_n' | 'R_x');
  /** Delta in display units (meters, degrees, percent). */
  delta: number;
}

export interface PlaybackAction {
  kind: 'play_pause' | 'step' | 'reset' | 'mode_next';
}

export type KeyAction = ParamNudge | PlaybackAction;

export const FP_STEP_M = 1.0;
export const TILT_STEP_DEG = 0.5;
export const CC_STEP_DEG = 1.0;
export const CN_STEP = 0.1;
export const RX_STEP = 0.1;

const BINDINGS: Record<string, KeyAction> = {
  ArrowUp: { kind: 'nudge', param: 'FP', delta: -FP_STEP_M },
  ArrowDown: { kind: 'nudge', param: 'FP', delta: FP_STEP_M },
  ArrowLeft: { kind: 'nudge', param: 'CC', delta: CC_STEP_DEG },
  ArrowRight: { kind: 'nudge', param: 'CC', delta: -CC_STEP_DEG },
  w: { kind: 'nudge', param: 'P_i', delta: TILT_STEP_DEG },
  s: { kind: 'nudge', param: 'P_i', delta: -TILT_STEP_DEG },
  a: { kind: 'nudge', param: 'R_o', delta: -TILT_STEP_DEG },
  d: { kind: 'nudge', param: 'R_o', delta: TILT_STEP_DEG },
  '[': { kind: 'nudge', param: 'C_n', delta: -CN_STEP },
  ']': { kind: 'nudge', param: 'C_n', delta: CN_STEP },
  '-': { kind: 'nudge', param: 'R_x', delta: -RX_STEP },
  '=': { kind: 'nudge', param: 'R_x', delta: RX_STEP },
  ' ': { kind: 'play_pause' },
  '.': { kind: 'step' },
  r: { kind: 'reset' },
  m: { kind: 'mode_next' },
};

/** Map a KeyboardEvent key to an action, or null when unbound. */
export function keyAction(key: string): KeyAction | null {
  return BINDINGS[key] ?? null;
}

export function nextMode(mode: Mode): Mode {
  const index = MODES.indexOf(mode);
  return MODES[(index + 1) % MODES.length];
}

/** Legend rows for the on-page help box. */
export const KEY_LEGEND: [string, string][] = [
  ['↑ / ↓', 'focal plane up / down (FP -1 / +1 m)'],
  ['← / →', 'compass correction counter-clockwise / clockwise'],
  ['w / s', 'tilt forward / backward (P_i)'],
  ['a / d', 'tilt left / right (R_o)'],
  ['[ / ]', 'contrast C_n down / up'],
  ['- / =', 'RX threshold down / up'],
  ['space', 'play / pause'],
  ['.', 'step one frame'],
  ['m', 'cycle mode'],
  ['r', 'reset focal-plane parameters'],
];
