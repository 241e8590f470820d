import { describe, expect, it } from "vitest";

import { CoregistrationMap } from "../src/coregistration";
import type { CoregistrationPayload } from "../src/types";
import { fixture } from "./helpers";

const payload = JSON.parse(fixture("coregistration.json")) as CoregistrationPayload;

describe("coregistration map", () => {
  it("round trips every curve sample exactly through the served map", () => {
    const map = new CoregistrationMap(payload);
    expect(map.nSamples).toBe(payload.n_samples);
    for (let k = 0; k < map.nSamples; k++) {
      const [row, col] = map.curveToPixel(k);
      expect(map.pixelToCurve(row, col)).toBe(k);
    }
  });

  it("serves the pixel pairs verbatim", () => {
    const map = new CoregistrationMap(payload);
    for (let k = 0; k < map.nSamples; k++) {
      expect(map.curveToPixel(k)).toEqual(payload.curve_to_pixel[k]);
    }
  });

  it("reports background pixels as null", () => {
    const map = new CoregistrationMap(payload);
    expect(map.pixelToCurve(0, 0)).toBeNull();
    expect(map.isForeground(0, 0)).toBe(false);
  });

  it("maps every foreground pixel to a valid sample", () => {
    const map = new CoregistrationMap(payload);
    const { rows, cols, sample } = payload.pixel_to_curve;
    for (let i = 0; i < rows.length; i++) {
      const s = map.pixelToCurve(rows[i]!, cols[i]!);
      expect(s).toBe(sample[i]);
      expect(s).toBeGreaterThanOrEqual(0);
      expect(s).toBeLessThan(map.nSamples);
    }
  });

  it("rejects out-of-range curve indices", () => {
    const map = new CoregistrationMap(payload);
    expect(() => map.curveToPixel(-1)).toThrow(RangeError);
    expect(() => map.curveToPixel(map.nSamples)).toThrow(RangeError);
    expect(() => map.curveToPixel(1.5)).toThrow(RangeError);
  });
});
