/** Export to the service's tracks.json schema and project save/load. */

import { trackFrameBoxes } from "./interpolate.js";
import { EditorProject, EditorTrack, isValidBox } from "./model.js";

export interface TracksJson {
  num_frames: number;
  width: number;
  height: number;
  objects: { id: number; boxes: (number[] | null)[] }[];
}

export function exportTracks(project: EditorProject): TracksJson {
  return {
    num_frames: project.n,
    width: project.width,
    height: project.height,
    objects: project.tracks.map((t) => ({
      id: t.id,
      boxes: trackFrameBoxes(t, project.n, project.width, project.height).map((b) => [
        b.x0,
        b.y0,
        b.x1,
        b.y1,
      ]),
    })),
  };
}

export function exportTracksText(project: EditorProject): string {
  return JSON.stringify(exportTracks(project), null, 2) + "\n";
}

/** Canonical project serialization; save -> load -> save is byte-identical. */
export function serializeProject(project: EditorProject): string {
  const payload = {
    n: project.n,
    width: project.width,
    height: project.height,
    contentImage: project.contentImage,
    tracks: project.tracks.map((t) => ({
      id: t.id,
      color: t.color,
      keyframes: t.keyframes.map((k) => ({
        frame: k.frame,
        box: { x0: k.box.x0, y0: k.box.y0, x1: k.box.x1, y1: k.box.y1 },
      })),
    })),
  };
  return JSON.stringify(payload, null, 2) + "\n";
}

export function parseProject(text: string): EditorProject {
  const raw = JSON.parse(text);
  for (const key of ["n", "width", "height", "tracks"]) {
    if (!(key in raw)) {
      throw new Error(`project file missing ${key}`);
    }
  }
  const project: EditorProject = {
    n: raw.n,
    width: raw.width,
    height: raw.height,
    contentImage: raw.contentImage ?? null,
    tracks: [],
  };
  for (const t of raw.tracks) {
    const track: EditorTrack = { id: t.id, color: t.color, keyframes: [] };
    let prev = -1;
    for (const k of t.keyframes) {
      if (!Number.isInteger(k.frame) || k.frame <= prev || k.frame > project.n - 1) {
        throw new Error(`track ${t.id}: bad keyframe index ${k.frame}`);
      }
      if (!isValidBox(k.box, project.width, project.height)) {
        throw new Error(`track ${t.id} frame ${k.frame}: invalid box`);
      }
      track.keyframes.push({ frame: k.frame, box: { ...k.box } });
      prev = k.frame;
    }
    if (track.keyframes.length === 0) {
      throw new Error(`track ${t.id} has no keyframes`);
    }
    project.tracks.push(track);
  }
  return project;
}
