/** Linear keyframe interpolation into full per-frame box lists. */

import { Box, EditorTrack } from "./model.js";

/**
 * Integer-exact linear interpolation: multiply before dividing so exact
 * results (e.g. 0..30 over 15 frames sampled at 5 -> 10) stay exact.
 */
function lerpCoord(a: number, b: number, t: number, t0: number, t1: number): number {
  return a + ((b - a) * (t - t0)) / (t1 - t0);
}

function lerpBox(a: Box, b: Box, t: number, t0: number, t1: number): Box {
  return {
    x0: lerpCoord(a.x0, b.x0, t, t0, t1),
    y0: lerpCoord(a.y0, b.y0, t, t0, t1),
    x1: lerpCoord(a.x1, b.x1, t, t0, t1),
    y1: lerpCoord(a.y1, b.y1, t, t0, t1),
  };
}

/**
 * Round an interpolated box to integer pixel coordinates, preserving
 * positive extent and the canvas bounds.
 */
export function roundBox(b: Box, width: number, height: number): Box {
  let x0 = Math.round(b.x0);
  let y0 = Math.round(b.y0);
  let x1 = Math.round(b.x1);
  let y1 = Math.round(b.y1);
  x0 = Math.max(0, Math.min(x0, width - 1));
  y0 = Math.max(0, Math.min(y0, height - 1));
  x1 = Math.max(x0 + 1, Math.min(x1, width));
  y1 = Math.max(y0 + 1, Math.min(y1, height));
  return { x0, y0, x1, y1 };
}

/**
 * Per-frame boxes for one track: linear between keyframes, held constant
 * before the first and after the last keyframe.
 */
export function interpolateTrack(track: EditorTrack, n: number): Box[] {
  const kfs = track.keyframes;
  if (kfs.length === 0) {
    throw new Error(`track ${track.id} has no keyframes`);
  }
  for (let i = 1; i < kfs.length; i++) {
    if (kfs[i].frame <= kfs[i - 1].frame) {
      throw new Error(`track ${track.id}: keyframe indices must be strictly increasing`);
    }
  }
  const boxes: Box[] = [];
  let seg = 0;
  for (let f = 0; f < n; f++) {
    if (f <= kfs[0].frame) {
      boxes.push({ ...kfs[0].box });
      continue;
    }
    if (f >= kfs[kfs.length - 1].frame) {
      boxes.push({ ...kfs[kfs.length - 1].box });
      continue;
    }
    while (seg < kfs.length - 2 && f > kfs[seg + 1].frame) {
      seg++;
    }
    const a = kfs[seg];
    const b = kfs[seg + 1];
    boxes.push(lerpBox(a.box, b.box, f, a.frame, b.frame));
  }
  return boxes;
}

/** Integer per-frame boxes as exported and rasterized. */
export function trackFrameBoxes(track: EditorTrack, n: number, width: number, height: number): Box[] {
  return interpolateTrack(track, n).map((b) => roundBox(b, width, height));
}
