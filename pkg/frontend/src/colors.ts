/** Visual constants for the plan view and panels. */

export const PLAN_PAD_M = 3;

export const LAYER_FILL_OPACITY = "0.45";
export const LAYER_STROKE = "#3c4043";
export const REFERENCE_STROKE = "#0b57d0";

export const DRAFT_LINE_COLOR = "#d93025";
export const SIDE_PREVIEW_OPACITY = "0.12";
export const ENDPOINT_RADIUS_M = 0.35;

/** Overlap percentage to a fill color: red at zero, green at full. */
export function overlapColor(pct: number): string {
  const clamped = Math.max(0, Math.min(100, pct));
  const hue = Math.round(clamped * 1.2);
  return `hsl(${hue}, 70%, 52%)`;
}
