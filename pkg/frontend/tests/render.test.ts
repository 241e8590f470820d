import { describe, expect, it } from "vitest";

import { CoregistrationMap } from "../src/coregistration";
import {
  capacityColor,
  curveIndexAtX,
  curveXY,
  drawRfcCurve,
  drawStentSpan,
  legendStops,
  type Box,
  type Canvas2D,
} from "../src/render";
import type { CoregistrationPayload } from "../src/types";
import { fixture } from "./helpers";

type Stroke = { style: string; width: number; dash: number[]; points: [number, number][] };

class RecorderCtx implements Canvas2D {
  lineWidth = 1;
  strokeStyle = "";
  fillStyle = "";
  globalAlpha = 1;
  strokes: Stroke[] = [];
  fills = 0;
  private path: [number, number][] = [];
  private dash: number[] = [];

  beginPath(): void {
    this.path = [];
  }
  moveTo(x: number, y: number): void {
    this.path.push([x, y]);
  }
  lineTo(x: number, y: number): void {
    this.path.push([x, y]);
  }
  stroke(): void {
    this.strokes.push({
      style: this.strokeStyle,
      width: this.lineWidth,
      dash: [...this.dash],
      points: [...this.path],
    });
  }
  arc(): void {
    this.path.push([NaN, NaN]);
  }
  fill(): void {
    this.fills += 1;
  }
  fillRect(): void {}
  clearRect(): void {}
  setLineDash(segments: number[]): void {
    this.dash = segments;
  }
}

const box: Box = { x: 10, y: 5, width: 400, height: 120 };

describe("capacity palette", () => {
  it("runs blue to red over the unit range, clipped outside", () => {
    expect(capacityColor(0)).toBe("hsl(240, 100%, 50%)");
    expect(capacityColor(1)).toBe("hsl(0, 100%, 50%)");
    expect(capacityColor(0.5)).toBe("hsl(120, 100%, 50%)");
    expect(capacityColor(-3)).toBe(capacityColor(0));
    expect(capacityColor(7)).toBe(capacityColor(1));
  });

  it("exposes monotone legend stops", () => {
    const stops = legendStops(5);
    expect(stops).toHaveLength(5);
    expect(stops[0]!.value).toBe(0);
    expect(stops[4]!.value).toBe(1);
    expect(stops[0]!.color).toBe(capacityColor(0));
  });
});

describe("curve drawing", () => {
  const values = [1.0, 0.8, 0.3, 0.6, 1.0];

  it("strokes the baseline curve segment by segment in its own colours", () => {
    const ctx = new RecorderCtx();
    drawRfcCurve(ctx, box, values);
    expect(ctx.strokes).toHaveLength(values.length - 1);
    ctx.strokes.forEach((stroke, i) => {
      expect(stroke.style).toBe(capacityColor(values[i]!));
      expect(stroke.points).toHaveLength(2);
    });
  });

  it("draws the post-stent curve as one red line over the baseline", () => {
    const ctx = new RecorderCtx();
    const post = values.map((v) => Math.max(v, 0.9));
    drawRfcCurve(ctx, box, values, { post });
    const red = ctx.strokes[ctx.strokes.length - 1]!;
    expect(red.style).toBe("red");
    expect(red.points).toHaveLength(values.length);
  });

  it("marks the cursor with a dashed vertical line", () => {
    const ctx = new RecorderCtx();
    drawRfcCurve(ctx, box, values, { cursorIndex: 2 });
    const cursor = ctx.strokes[ctx.strokes.length - 1]!;
    expect(cursor.dash).toEqual([4, 3]);
    const [x0] = curveXY(box, values.length, 2, 0);
    expect(cursor.points[0]![0]).toBe(x0);
    expect(cursor.points[0]![1]).toBe(box.y);
    expect(cursor.points[1]![1]).toBe(box.y + box.height);
  });

  it("fills a marker per landing point", () => {
    const ctx = new RecorderCtx();
    drawRfcCurve(ctx, box, values, { landingIndices: [1, 3] });
    expect(ctx.fills).toBe(2);
  });

  it("recovers the sample index from a click x", () => {
    for (let k = 0; k < values.length; k++) {
      const [x] = curveXY(box, values.length, k, values[k]!);
      expect(curveIndexAtX(box, values.length, x)).toBe(k);
    }
    expect(curveIndexAtX(box, values.length, box.x - 50)).toBe(0);
    expect(curveIndexAtX(box, values.length, box.x + box.width + 50)).toBe(values.length - 1);
  });
});

describe("stent span on the image", () => {
  const coreg = new CoregistrationMap(
    JSON.parse(fixture("coregistration.json")) as CoregistrationPayload,
  );

  it("strokes the centreline pixels between the landing samples", () => {
    const ctx = new RecorderCtx();
    drawStentSpan(ctx, coreg, 1.0, {
      x_prox_mm: 27.0,
      x_dist_mm: 40.0,
      d_max_mm: 3.2,
      edge_len_mm: 1.5,
    });
    expect(ctx.strokes).toHaveLength(1);
    const span = ctx.strokes[0]!;
    expect(span.style).toBe("red");
    expect(span.points).toHaveLength(40 - 27 + 1);
    const [r0, c0] = coreg.curveToPixel(27);
    expect(span.points[0]).toEqual([c0, r0]);
    expect(ctx.globalAlpha).toBe(1);
  });

  it("draws nothing for an empty span", () => {
    const ctx = new RecorderCtx();
    drawStentSpan(ctx, coreg, 1.0, {
      x_prox_mm: 30.0,
      x_dist_mm: 30.0,
      d_max_mm: 3.2,
      edge_len_mm: 1.0,
    });
    expect(ctx.strokes).toHaveLength(0);
  });
});
