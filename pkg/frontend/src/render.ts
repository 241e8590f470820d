import type { CoregistrationMap } from "./coregistration";
import type { StentPlanPayload } from "./types";
import type { Cursor } from "./viewstate";

/** Structural subset of CanvasRenderingContext2D used by the renderer, so
 *  drawing is testable without a DOM. */
export interface Canvas2D {
  lineWidth: number;
  strokeStyle: string;
  fillStyle: string;
  globalAlpha: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  setLineDash(segments: number[]): void;
}

export type Box = {
  x: number;
  y: number;
  width: number;
  height: number;
};

// Curves are drawn over a fixed capacity range so pre and post overlay
// consistently; capacity above 1 (post-stent oversizing) still fits.
const CURVE_V_MAX = 1.25;

/**
 * Colour for a capacity value, the legend convention of the heat map:
 * hue runs 240 (blue, capacity 0) to 0 (red, capacity 1), clipped.
 */
export function capacityColor(value: number): string {
  const t = Math.min(1, Math.max(0, value));
  return `hsl(${Math.round(240 * (1 - t))}, 100%, 50%)`;
}

export function curveXY(box: Box, n: number, index: number, value: number): [number, number] {
  const x = box.x + (n <= 1 ? 0 : (index / (n - 1)) * box.width);
  const v = Math.min(CURVE_V_MAX, Math.max(0, value));
  const y = box.y + box.height * (1 - v / CURVE_V_MAX);
  return [x, y];
}

/** Inverse of curveXY in x: nearest sample index for a click at pixel x. */
export function curveIndexAtX(box: Box, n: number, x: number): number {
  if (n <= 1) return 0;
  const t = (x - box.x) / box.width;
  const k = Math.round(t * (n - 1));
  return Math.min(n - 1, Math.max(0, k));
}

export type CurveOptions = {
  post?: number[];
  cursorIndex?: number;
  landingIndices?: number[];
};

/**
 * Draw the capacity curve: the baseline curve segment-coloured by its own
 * value, the post-stent curve as a single red line on top, plus the cursor
 * and any landing markers.
 */
export function drawRfcCurve(
  ctx: Canvas2D,
  box: Box,
  values: number[],
  options: CurveOptions = {},
): void {
  ctx.clearRect(box.x, box.y, box.width, box.height);
  const n = values.length;
  ctx.lineWidth = 2;
  ctx.setLineDash([]);
  for (let i = 0; i + 1 < n; i++) {
    ctx.beginPath();
    ctx.strokeStyle = capacityColor(values[i]!);
    ctx.moveTo(...curveXY(box, n, i, values[i]!));
    ctx.lineTo(...curveXY(box, n, i + 1, values[i + 1]!));
    ctx.stroke();
  }
  const post = options.post;
  if (post && post.length === n) {
    ctx.beginPath();
    ctx.strokeStyle = "red";
    ctx.moveTo(...curveXY(box, n, 0, post[0]!));
    for (let i = 1; i < n; i++) ctx.lineTo(...curveXY(box, n, i, post[i]!));
    ctx.stroke();
  }
  for (const k of options.landingIndices ?? []) {
    const [x, y] = curveXY(box, n, k, values[k] ?? 0);
    ctx.beginPath();
    ctx.fillStyle = "black";
    ctx.arc(x, y, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
  if (options.cursorIndex !== undefined) {
    const [x] = curveXY(box, n, options.cursorIndex, 0);
    ctx.beginPath();
    ctx.strokeStyle = "#555";
    ctx.lineWidth = 1;
    ctx.setLineDash([4, 3]);
    ctx.moveTo(x, box.y);
    ctx.lineTo(x, box.y + box.height);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

/** Crosshair at the co-registered image pixel. */
export function drawImageCursor(ctx: Canvas2D, cursor: Cursor, scale = 1): void {
  const [row, col] = cursor.pixel;
  const x = col * scale;
  const y = row * scale;
  ctx.beginPath();
  ctx.strokeStyle = "yellow";
  ctx.lineWidth = 1;
  ctx.setLineDash([]);
  ctx.moveTo(x - 6, y);
  ctx.lineTo(x + 6, y);
  ctx.moveTo(x, y - 6);
  ctx.lineTo(x, y + 6);
  ctx.stroke();
}

/**
 * Draw the device span on the image: the centreline pixels between the two
 * landing samples, stroked wide and translucent.
 */
export function drawStentSpan(
  ctx: Canvas2D,
  coreg: CoregistrationMap,
  stepMm: number,
  plan: StentPlanPayload,
  scale = 1,
): void {
  const first = Math.max(0, Math.round(plan.x_prox_mm / stepMm));
  const last = Math.min(coreg.nSamples - 1, Math.round(plan.x_dist_mm / stepMm));
  if (last <= first) return;
  ctx.beginPath();
  ctx.strokeStyle = "red";
  ctx.globalAlpha = 0.45;
  ctx.lineWidth = 6;
  ctx.setLineDash([]);
  const [r0, c0] = coreg.curveToPixel(first);
  ctx.moveTo(c0 * scale, r0 * scale);
  for (let k = first + 1; k <= last; k++) {
    const [r, c] = coreg.curveToPixel(k);
    ctx.lineTo(c * scale, r * scale);
  }
  ctx.stroke();
  ctx.globalAlpha = 1;
}

/** Vertical legend bar for the capacity palette with end labels. */
export function legendStops(steps = 16): { value: number; color: string }[] {
  const stops: { value: number; color: string }[] = [];
  for (let i = 0; i < steps; i++) {
    const v = i / (steps - 1);
    stops.push({ value: v, color: capacityColor(v) });
  }
  return stops;
}
