import { describe, expect, it } from "vitest";

import { addTrack, newProject, removeKeyframe, upsertKeyframe } from "../src/model.js";
import { exportTracks, parseProject, serializeProject } from "../src/tracksio.js";

function sampleProject() {
  const p = newProject(16, 64, 64);
  p.contentImage = "data:image/png;base64,AAAA";
  const t0 = addTrack(p, 0, { x0: 4, y0: 4, x1: 12, y1: 12 });
  upsertKeyframe(t0, 15, { x0: 40, y0: 4, x1: 48, y1: 12 }, p.n);
  const t1 = addTrack(p, 0, { x0: 30, y0: 30, x1: 36, y1: 36 });
  upsertKeyframe(t1, 8, { x0: 30, y0: 44, x1: 36, y1: 50 }, p.n);
  return p;
}

describe("project save/load", () => {
  it("round trip is identity (byte-identical serialization)", () => {
    const p = sampleProject();
    const text = serializeProject(p);
    const reloaded = parseProject(text);
    expect(serializeProject(reloaded)).toBe(text);
    expect(reloaded).toEqual(p);
  });

  it("rejects out-of-range keyframes", () => {
    const p = sampleProject();
    const text = serializeProject(p).replace('"frame": 15', '"frame": 99');
    expect(() => parseProject(text)).toThrow(/bad keyframe index/);
  });

  it("rejects invalid boxes", () => {
    const p = sampleProject();
    const text = serializeProject(p).replace('"x1": 12', '"x1": 4');
    expect(() => parseProject(text)).toThrow(/invalid box/);
  });
});

describe("keyframe editing rules", () => {
  it("upsert replaces an existing keyframe instead of duplicating", () => {
    const p = newProject(16, 64, 64);
    const t = addTrack(p, 0, { x0: 0, y0: 0, x1: 4, y1: 4 });
    expect(upsertKeyframe(t, 0, { x0: 2, y0: 0, x1: 6, y1: 4 }, p.n)).toBe(true);
    expect(t.keyframes).toHaveLength(1);
    expect(t.keyframes[0].box.x0).toBe(2);
  });

  it("rejects keyframes outside [0, n-1]", () => {
    const p = newProject(16, 64, 64);
    const t = addTrack(p, 0, { x0: 0, y0: 0, x1: 4, y1: 4 });
    expect(upsertKeyframe(t, 16, { x0: 0, y0: 0, x1: 4, y1: 4 }, p.n)).toBe(false);
    expect(upsertKeyframe(t, -1, { x0: 0, y0: 0, x1: 4, y1: 4 }, p.n)).toBe(false);
  });

  it("never removes the last keyframe", () => {
    const p = newProject(16, 64, 64);
    const t = addTrack(p, 0, { x0: 0, y0: 0, x1: 4, y1: 4 });
    expect(removeKeyframe(t, 0)).toBe(false);
    upsertKeyframe(t, 5, { x0: 8, y0: 0, x1: 12, y1: 4 }, p.n);
    expect(removeKeyframe(t, 5)).toBe(true);
    expect(t.keyframes).toHaveLength(1);
  });
});

describe("tracks.json export", () => {
  it("matches the service schema with per-frame integer boxes", () => {
    const p = sampleProject();
    const out = exportTracks(p);
    expect(out.num_frames).toBe(16);
    expect(out.width).toBe(64);
    expect(out.height).toBe(64);
    expect(out.objects).toHaveLength(2);
    for (const obj of out.objects) {
      expect(obj.boxes).toHaveLength(16);
      for (const b of obj.boxes) {
        expect(b).not.toBeNull();
        expect(b!.every(Number.isInteger)).toBe(true);
        const [x0, y0, x1, y1] = b!;
        expect(x0).toBeLessThan(x1);
        expect(y0).toBeLessThan(y1);
      }
    }
    // first keyframe of track 0 appears verbatim on frame 0
    expect(out.objects[0].boxes[0]).toEqual([4, 4, 12, 12]);
    expect(out.objects[0].boxes[15]).toEqual([40, 4, 48, 12]);
  });
});
