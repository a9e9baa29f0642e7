/** Canvas editor: draw boxes on frame 0, drag them at any scrubbed frame to
 * add keyframes; renders the content image with track overlays. */

import { trackFrameBoxes } from "./interpolate.js";
import { addTrack, Box, EditorProject, upsertKeyframe } from "./model.js";

type DragState =
  | { kind: "draw"; startX: number; startY: number }
  | { kind: "move"; trackId: number; grabDx: number; grabDy: number; box: Box }
  | null;

export class TrackEditor {
  project: EditorProject;
  currentFrame = 0;
  selectedTrackId: number | null = null;
  onChange: () => void = () => {};

  private drag: DragState = null;
  private image: HTMLImageElement | null = null;
  private scale: number;

  constructor(private canvas: HTMLCanvasElement, project: EditorProject, displayScale = 6) {
    this.project = project;
    this.scale = displayScale;
    canvas.width = project.width * this.scale;
    canvas.height = project.height * this.scale;
    canvas.addEventListener("mousedown", (e) => this.onDown(e));
    canvas.addEventListener("mousemove", (e) => this.onMove(e));
    window.addEventListener("mouseup", () => this.onUp());
  }

  setImage(dataUrl: string | null): void {
    if (!dataUrl) {
      this.image = null;
      this.render();
      return;
    }
    const img = new Image();
    img.onload = () => {
      this.image = img;
      this.render();
    };
    img.src = dataUrl;
  }

  private toPixel(e: MouseEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    const x = Math.floor(((e.clientX - rect.left) / rect.width) * this.project.width);
    const y = Math.floor(((e.clientY - rect.top) / rect.height) * this.project.height);
    return {
      x: Math.max(0, Math.min(x, this.project.width - 1)),
      y: Math.max(0, Math.min(y, this.project.height - 1)),
    };
  }

  private boxesAtCurrentFrame(): Map<number, Box> {
    const out = new Map<number, Box>();
    for (const t of this.project.tracks) {
      out.set(t.id, trackFrameBoxes(t, this.project.n, this.project.width, this.project.height)[this.currentFrame]);
    }
    return out;
  }

  private onDown(e: MouseEvent): void {
    const { x, y } = this.toPixel(e);
    this.lastMouse = { x, y };
    for (const [id, box] of this.boxesAtCurrentFrame()) {
      if (x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1) {
        this.selectedTrackId = id;
        this.drag = { kind: "move", trackId: id, grabDx: x - box.x0, grabDy: y - box.y0, box };
        this.render();
        return;
      }
    }
    if (this.currentFrame === 0) {
      // new boxes are drawn on the content image (frame 0) so each rectangle
      // starts on top of its object
      this.drag = { kind: "draw", startX: x, startY: y };
    }
  }

  private onMove(e: MouseEvent): void {
    if (!this.drag) {
      return;
    }
    const { x, y } = this.toPixel(e);
    if (this.drag.kind === "draw") {
      this.render();
      const ctx = this.canvas.getContext("2d")!;
      ctx.strokeStyle = "#ffffff";
      ctx.setLineDash([4, 3]);
      ctx.strokeRect(
        Math.min(this.drag.startX, x) * this.scale,
        Math.min(this.drag.startY, y) * this.scale,
        (Math.abs(x - this.drag.startX) + 1) * this.scale,
        (Math.abs(y - this.drag.startY) + 1) * this.scale,
      );
      ctx.setLineDash([]);
    } else {
      const w = this.drag.box.x1 - this.drag.box.x0;
      const h = this.drag.box.y1 - this.drag.box.y0;
      let nx0 = x - this.drag.grabDx;
      let ny0 = y - this.drag.grabDy;
      nx0 = Math.max(0, Math.min(nx0, this.project.width - w));
      ny0 = Math.max(0, Math.min(ny0, this.project.height - h));
      this.drag.box = { x0: nx0, y0: ny0, x1: nx0 + w, y1: ny0 + h };
      this.renderWithGhost(this.drag.box);
    }
  }

  private onUp(): void {
    if (!this.drag) {
      return;
    }
    if (this.drag.kind === "draw") {
      const ghost = this.pendingDrawBox();
      if (ghost && ghost.x1 > ghost.x0 && ghost.y1 > ghost.y0) {
        const track = addTrack(this.project, 0, ghost);
        this.selectedTrackId = track.id;
      }
    } else {
      const track = this.project.tracks.find((t) => t.id === (this.drag as any).trackId);
      if (track) {
        upsertKeyframe(track, this.currentFrame, this.drag.box, this.project.n);
      }
    }
    this.drag = null;
    this.render();
    this.onChange();
  }

  private lastMouse: { x: number; y: number } | null = null;

  private pendingDrawBox(): Box | null {
    if (!this.drag || this.drag.kind !== "draw" || !this.lastMouse) {
      return null;
    }
    const { startX, startY } = this.drag;
    const { x, y } = this.lastMouse;
    return {
      x0: Math.min(startX, x),
      y0: Math.min(startY, y),
      x1: Math.max(startX, x) + 1,
      y1: Math.max(startY, y) + 1,
    };
  }

  setFrame(frame: number): void {
    this.currentFrame = Math.max(0, Math.min(frame, this.project.n - 1));
    this.render();
  }

  private renderWithGhost(ghost: Box): void {
    this.render(ghost);
  }

  render(ghost: Box | null = null): void {
    const ctx = this.canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    ctx.fillStyle = "#20242b";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.image) {
      ctx.drawImage(this.image, 0, 0, this.canvas.width, this.canvas.height);
    }
    for (const t of this.project.tracks) {
      const boxes = trackFrameBoxes(t, this.project.n, this.project.width, this.project.height);
      const box = this.drag?.kind === "move" && this.drag.trackId === t.id && ghost ? ghost : boxes[this.currentFrame];
      ctx.lineWidth = t.id === this.selectedTrackId ? 3 : 2;
      ctx.strokeStyle = t.color;
      ctx.strokeRect(box.x0 * this.scale, box.y0 * this.scale, (box.x1 - box.x0) * this.scale, (box.y1 - box.y0) * this.scale);
      const hasKf = t.keyframes.some((k) => k.frame === this.currentFrame);
      if (hasKf) {
        ctx.fillStyle = t.color;
        ctx.fillRect(box.x0 * this.scale - 3, box.y0 * this.scale - 3, 6, 6);
      }
    }
  }

  trackCanvasListeners(): void {
    this.canvas.addEventListener("mousemove", (e) => {
      this.lastMouse = this.toPixel(e);
    });
  }
}
