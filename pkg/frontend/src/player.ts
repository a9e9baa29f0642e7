/** Frame-sequence player with scrubbing and looping. */

export class FramePlayer {
  private frames: HTMLImageElement[] = [];
  private index = 0;
  private timer: number | null = null;
  private loop = true;

  constructor(
    private canvas: HTMLCanvasElement,
    private scrubber: HTMLInputElement,
    private label: HTMLElement,
    private fps = 8,
  ) {
    this.scrubber.addEventListener("input", () => {
      this.pause();
      this.show(Number(this.scrubber.value));
    });
  }

  get frameCount(): number {
    return this.frames.length;
  }

  async setFramesBase64(pngs: string[]): Promise<void> {
    this.pause();
    this.frames = await Promise.all(
      pngs.map(
        (b64) =>
          new Promise<HTMLImageElement>((resolve, reject) => {
            const img = new Image();
            img.onload = () => resolve(img);
            img.onerror = () => reject(new Error("frame decode failed"));
            img.src = "data:image/png;base64," + b64;
          }),
      ),
    );
    this.scrubber.max = String(Math.max(this.frames.length - 1, 0));
    this.show(0);
  }

  setFramesCanvases(canvases: HTMLCanvasElement[]): void {
    this.pause();
    this.frames = canvases.map((c) => {
      const img = new Image();
      img.src = c.toDataURL("image/png");
      return img;
    });
    this.scrubber.max = String(Math.max(this.frames.length - 1, 0));
    // canvases are already decoded; draw immediately once images settle
    setTimeout(() => this.show(0), 0);
  }

  show(index: number): void {
    if (this.frames.length === 0) {
      return;
    }
    this.index = Math.max(0, Math.min(index, this.frames.length - 1));
    const ctx = this.canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.drawImage(this.frames[this.index], 0, 0, this.canvas.width, this.canvas.height);
    this.scrubber.value = String(this.index);
    this.label.textContent = `${this.index + 1} / ${this.frames.length}`;
  }

  play(): void {
    if (this.timer !== null || this.frames.length === 0) {
      return;
    }
    this.timer = window.setInterval(() => {
      const next = this.index + 1;
      if (next >= this.frames.length) {
        if (this.loop) {
          this.show(0);
        } else {
          this.pause();
        }
      } else {
        this.show(next);
      }
    }, 1000 / this.fps);
  }

  pause(): void {
    if (this.timer !== null) {
      window.clearInterval(this.timer);
      this.timer = null;
    }
  }

  toggle(): void {
    this.timer === null ? this.play() : this.pause();
  }
}
