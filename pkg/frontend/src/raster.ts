/**
 * Client-side rasterization of box tracks into binary motion frames.
 *
 * Must match the server's rule exactly: pixel (row i, col j) is 1 iff some
 * box satisfies x0 <= j < x1 and y0 <= i < y1 (half-open on both axes).
 */

import { trackFrameBoxes } from "./interpolate.js";
import { Box, EditorProject } from "./model.js";

/** One binary frame per time step, each height*width bytes of 0/1, row-major. */
export function rasterizeProject(project: EditorProject): Uint8Array[] {
  const { n, width, height } = project;
  const perTrack: Box[][] = project.tracks.map((t) => trackFrameBoxes(t, n, width, height));
  const frames: Uint8Array[] = [];
  for (let f = 0; f < n; f++) {
    const frame = new Uint8Array(height * width);
    for (const boxes of perTrack) {
      const b = boxes[f];
      for (let i = b.y0; i < b.y1; i++) {
        frame.fill(1, i * width + b.x0, i * width + b.x1);
      }
    }
    frames.push(frame);
  }
  return frames;
}

/** Flat n*height*width byte array (matches the CLI's --raw output). */
export function rasterizeFlat(project: EditorProject): Uint8Array {
  const frames = rasterizeProject(project);
  const out = new Uint8Array(frames.length * project.height * project.width);
  frames.forEach((frame, idx) => out.set(frame, idx * frame.length));
  return out;
}
