import { describe, expect, it } from "vitest";

import { interpolateTrack, roundBox, trackFrameBoxes } from "../src/interpolate.js";
import { EditorTrack } from "../src/model.js";

function track(keyframes: EditorTrack["keyframes"]): EditorTrack {
  return { id: 0, color: "#fff", keyframes };
}

describe("interpolateTrack", () => {
  it("hits the exact midpoint for integer keyframes (f0 x=0, f15 x=30 -> f5 x=10)", () => {
    const t = track([
      { frame: 0, box: { x0: 0, y0: 0, x1: 8, y1: 8 } },
      { frame: 15, box: { x0: 30, y0: 0, x1: 38, y1: 8 } },
    ]);
    const boxes = interpolateTrack(t, 16);
    expect(boxes[5].x0).toBe(10);
    expect(boxes[5].x1).toBe(18);
    expect(boxes[5].y0).toBe(0);
  });

  it("holds before the first and after the last keyframe", () => {
    const t = track([
      { frame: 3, box: { x0: 2, y0: 2, x1: 6, y1: 6 } },
      { frame: 8, box: { x0: 12, y0: 2, x1: 16, y1: 6 } },
    ]);
    const boxes = interpolateTrack(t, 16);
    for (let f = 0; f <= 3; f++) {
      expect(boxes[f]).toEqual({ x0: 2, y0: 2, x1: 6, y1: 6 });
    }
    for (let f = 8; f < 16; f++) {
      expect(boxes[f]).toEqual({ x0: 12, y0: 2, x1: 16, y1: 6 });
    }
  });

  it("a single keyframe yields a constant track", () => {
    const t = track([{ frame: 7, box: { x0: 1, y0: 1, x1: 5, y1: 4 } }]);
    const boxes = interpolateTrack(t, 16);
    expect(boxes).toHaveLength(16);
    for (const b of boxes) {
      expect(b).toEqual({ x0: 1, y0: 1, x1: 5, y1: 4 });
    }
  });

  it("rejects non-increasing keyframe indices", () => {
    const t = track([
      { frame: 4, box: { x0: 0, y0: 0, x1: 2, y1: 2 } },
      { frame: 4, box: { x0: 1, y0: 0, x1: 3, y1: 2 } },
    ]);
    expect(() => interpolateTrack(t, 16)).toThrow(/strictly increasing/);
  });

  it("interpolated boxes keep positive extent for valid keyframes", () => {
    // corner-wise linear interpolation of valid boxes stays valid
    const t = track([
      { frame: 0, box: { x0: 0, y0: 0, x1: 1, y1: 1 } },
      { frame: 15, box: { x0: 62, y0: 60, x1: 64, y1: 64 } },
    ]);
    for (const b of trackFrameBoxes(t, 16, 64, 64)) {
      expect(b.x0).toBeLessThan(b.x1);
      expect(b.y0).toBeLessThan(b.y1);
      expect(b.x0).toBeGreaterThanOrEqual(0);
      expect(b.x1).toBeLessThanOrEqual(64);
    }
  });

  it("piecewise segments pass through every keyframe exactly", () => {
    const t = track([
      { frame: 0, box: { x0: 4, y0: 4, x1: 10, y1: 10 } },
      { frame: 6, box: { x0: 16, y0: 4, x1: 22, y1: 10 } },
      { frame: 12, box: { x0: 16, y0: 20, x1: 22, y1: 26 } },
    ]);
    const boxes = interpolateTrack(t, 16);
    expect(boxes[0]).toEqual(t.keyframes[0].box);
    expect(boxes[6]).toEqual(t.keyframes[1].box);
    expect(boxes[12]).toEqual(t.keyframes[2].box);
    // halfway through the second segment
    expect(boxes[9]).toEqual({ x0: 16, y0: 12, x1: 22, y1: 18 });
  });
});

describe("roundBox", () => {
  it("clamps to canvas and preserves extent", () => {
    expect(roundBox({ x0: -0.4, y0: 0, x1: 0.2, y1: 1 }, 64, 64)).toEqual({
      x0: 0,
      y0: 0,
      x1: 1,
      y1: 1,
    });
    expect(roundBox({ x0: 63.6, y0: 0, x1: 64.4, y1: 2 }, 64, 64)).toEqual({
      x0: 63,
      y0: 0,
      x1: 64,
      y1: 2,
    });
  });
});
