/**
 * Unit conversion between UI values (degrees) and wire values (radians).
 *
 * Operators think in degrees, the service schema stays canonical in
 * radians, so the conversion lives in exactly one place.
 */

import type { UiParams, WireParams } from './types.js';

// Parameters that are angles on the wire
const ANGLE_FIELDS = new Set<keyof UiParams>(['P_i', 'R_o', 'CC']);

export function degToRad(deg: number): number {
  return (deg * Math.PI) / 180;
}

export function radToDeg(rad: number): number {
  return (rad * 180) / Math.PI;
}

/** Convert a partial set of UI edits into wire units. */
export function uiToWire(changes: Partial<UiParams>): Partial<WireParams> {
  const out: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(changes)) {
    if (ANGLE_FIELDS.has(key as keyof UiParams) && typeof value === 'number') {
      out[key] = degToRad(value);
    } else {
      out[key] = value;
    }
  }
  return out as Partial<WireParams>;
}

/** Convert acknowledged wire parameters into display units. */
export function wireToUi(params: WireParams): UiParams {
  return {
    ...params,
    P_i: radToDeg(params.P_i),
    R_o: radToDeg(params.R_o),
    CC: radToDeg(params.CC),
  };
}

export function formatValue(name: keyof UiParams, value: number): string {
  switch (name) {
    case 'FP':
      return `${value.toFixed(1)} m`;
    case 'P_i':
    case 'R_o':
    case 'CC':
      return `${value.toFixed(1)}°`;
    case 'C_n':
      return value.toFixed(1);
    case 'R_x':
      return `${value.toFixed(1)} %`;
    case 'window_size':
      return String(Math.round(value));
    default:
      return String(value);
  }
}

export function formatLatency(ms: number | null): string {
  return ms === null ? '-' : `${ms.toFixed(1)} ms`;
}
