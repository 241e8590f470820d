import type { CoregistrationPayload } from "./types";

// Packed pixel key; masks are far below 2^16 on a side.
const keyOf = (row: number, col: number): number => row * 65536 + col;

/**
 * Bidirectional curve <-> image lookup backed entirely by the server map.
 * Round trips are exact at sample resolution: the centreline pixel of a
 * sample maps back to that sample.
 */
export class CoregistrationMap {
  readonly nSamples: number;
  private readonly curveToPixelTable: [number, number][];
  private readonly pixelTable: Map<number, number>;

  constructor(payload: CoregistrationPayload) {
    this.nSamples = payload.n_samples;
    this.curveToPixelTable = payload.curve_to_pixel;
    this.pixelTable = new Map();
    const { rows, cols, sample } = payload.pixel_to_curve;
    for (let i = 0; i < rows.length; i++) {
      this.pixelTable.set(keyOf(rows[i]!, cols[i]!), sample[i]!);
    }
  }

  /** Centreline pixel [row, col] of curve sample k. */
  curveToPixel(k: number): [number, number] {
    if (!Number.isInteger(k) || k < 0 || k >= this.nSamples) {
      throw new RangeError(`sample index ${k} outside [0, ${this.nSamples})`);
    }
    return this.curveToPixelTable[k]!;
  }

  /** Curve sample for a foreground pixel, or null on background. */
  pixelToCurve(row: number, col: number): number | null {
    return this.pixelTable.get(keyOf(row, col)) ?? null;
  }

  isForeground(row: number, col: number): boolean {
    return this.pixelTable.has(keyOf(row, col));
  }
}
