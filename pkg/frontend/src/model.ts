/** Core editor data model: boxes, keyframed tracks, projects. */

export interface Box {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface Keyframe {
  frame: number;
  box: Box;
}

export interface EditorTrack {
  id: number;
  color: string;
  /** Keyframe indices are strictly increasing, all within [0, n-1]. */
  keyframes: Keyframe[];
}

export interface EditorProject {
  n: number;
  width: number;
  height: number;
  /** Content reference image as a data URL (PNG), if one is loaded. */
  contentImage: string | null;
  tracks: EditorTrack[];
}

export const TRACK_COLORS = [
  "#e6553a",
  "#36a05c",
  "#3a76e6",
  "#d4a017",
  "#9541c9",
  "#1fa8a0",
];

export function isValidBox(b: Box, width: number, height: number): boolean {
  return (
    Number.isInteger(b.x0) &&
    Number.isInteger(b.y0) &&
    Number.isInteger(b.x1) &&
    Number.isInteger(b.y1) &&
    b.x0 >= 0 &&
    b.y0 >= 0 &&
    b.x0 < b.x1 &&
    b.y0 < b.y1 &&
    b.x1 <= width &&
    b.y1 <= height
  );
}

/** Insert or replace a keyframe, keeping indices strictly increasing. */
export function upsertKeyframe(track: EditorTrack, frame: number, box: Box, n: number): boolean {
  if (!Number.isInteger(frame) || frame < 0 || frame > n - 1) {
    return false;
  }
  const existing = track.keyframes.findIndex((k) => k.frame === frame);
  if (existing >= 0) {
    track.keyframes[existing] = { frame, box };
  } else {
    track.keyframes.push({ frame, box });
    track.keyframes.sort((a, b) => a.frame - b.frame);
  }
  return true;
}

export function removeKeyframe(track: EditorTrack, frame: number): boolean {
  const idx = track.keyframes.findIndex((k) => k.frame === frame);
  if (idx < 0 || track.keyframes.length <= 1) {
    return false; // a track needs at least one keyframe
  }
  track.keyframes.splice(idx, 1);
  return true;
}

export function newProject(n: number, width: number, height: number): EditorProject {
  return { n, width, height, contentImage: null, tracks: [] };
}

export function addTrack(project: EditorProject, frame: number, box: Box): EditorTrack {
  const id = project.tracks.length === 0 ? 0 : Math.max(...project.tracks.map((t) => t.id)) + 1;
  const track: EditorTrack = {
    id,
    color: TRACK_COLORS[id % TRACK_COLORS.length],
    keyframes: [{ frame, box }],
  };
  project.tracks.push(track);
  return track;
}
